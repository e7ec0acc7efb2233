#pragma once
// JSON config files for CLI11. Accepts a flat object of option values, or a
// manifest {"command": ..., "options": {...}} as written by the tool itself.

#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace ddslp::cli {

class JsonConfig : public CLI::Config {
 public:
  /// root: the application whose subcommands the option values belong to.
  explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json opts = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (name == "help" || name == "config") continue;
      if (opt->get_expected_min() > 0) {
        if (opt->count() > 0) {
          const auto& res = opt->results();
          if (opt->get_items_expected_max() > 1) opts[name] = res;
          else opts[name] = res.back();
        } else if (default_also && opt->get_default_str() == "{}") {
          opts[name] = nlohmann::json::array();
        } else if (default_also && !opt->get_default_str().empty()) {
          opts[name] = opt->get_default_str();
        }
      } else if (opt->count() > 0 || default_also) {
        opts[name] = opt->count() > 0 && opt->as<bool>();
      }
    }
    return nlohmann::json{{"command", app->get_name()}, {"options", opts}}.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::string command;
    if (j.contains("command")) command = j.at("command").get<std::string>();
    if (j.contains("options")) j = j.at("options");
    else j.erase("command");

    // values go to the subcommand named in the file, or to the one given on
    // the command line; a replayed manifest selects its own subcommand
    std::vector<std::string> given;
    if (root_)
      for (const CLI::App* sub : root_->get_subcommands()) given.push_back(sub->get_name());
    if (!command.empty() && !given.empty() && given.front() != command)
      throw CLI::ConversionError("config file is for '" + command + "', not '" + given.front() + "'");
    if (command.empty() && !given.empty()) command = given.front();
    std::vector<std::string> parents;
    if (!command.empty()) parents.push_back(command);

    std::vector<CLI::ConfigItem> out;
    if (given.empty() && !command.empty()) {
      CLI::ConfigItem open;
      open.parents = parents;
      open.name = "++";
      out.push_back(std::move(open));
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_null() || (it.value().is_array() && it.value().empty())) continue;
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it.value().is_array()) {
        for (const auto& v : it.value()) item.inputs.push_back(scalar(v, it.key()));
      } else {
        item.inputs = {scalar(it.value(), it.key())};
      }
      out.push_back(std::move(item));
    }
    return out;
  }

 private:
  static std::string scalar(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config value for '" + key + "' must be a string, number, boolean or array of those");
  }

  const CLI::App* root_;
};

}  // namespace ddslp::cli

#include <cstdlib>
#include <sstream>
#include <string>

#include "overid/cli.hpp"
#include "overid/error.hpp"

namespace overid::cli {

namespace {

ScmParams named(std::string_view name, bool& found) {
  found = true;
  ScmParams p;
  if (name == "default") return p;
  if (name == "fig3a") {
    p.var_ux = 0.05;
    p.var_um = 0.05;
    return p;
  }
  if (name == "fig3b") {
    p.var_uw = 2.0;
    p.var_ux = 0.01;
    p.var_um = 0.1;
    return p;
  }
  if (name.rfind("f2-case", 0) == 0) {
    p.var_um = 0.64;
    if (name == "f2-case1") p.b = 3.7;
    else if (name == "f2-case2") p.b = 3.955;
    else if (name == "f2-case3") p.b = 4.3;
    else found = false;
    return p;
  }
  found = false;
  return p;
}

}  // namespace

ScmParams parse_params(std::string_view spec) {
  bool found = false;
  ScmParams p = named(spec, found);
  if (found) return p;
  p = ScmParams{};
  std::stringstream ss{std::string(spec)};
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "params: expected name=value or a named set, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(val.c_str(), &end);
    if (val.empty() || *end != '\0') {
      throw Error(ErrorCode::Config, "params: '" + val + "' is not a number");
    }
    if (key == "a") p.a = v;
    else if (key == "b") p.b = v;
    else if (key == "c") p.c = v;
    else if (key == "d") p.d = v;
    else if (key == "var_uw") p.var_uw = v;
    else if (key == "var_ux") p.var_ux = v;
    else if (key == "var_um") p.var_um = v;
    else if (key == "var_uy") p.var_uy = v;
    else throw Error(ErrorCode::Config, "params: unknown parameter '" + key + "'");
    any = true;
  }
  if (!any) throw Error(ErrorCode::Config, "params: empty specification");
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("params: ") + e.what());
  }
  return p;
}

}  // namespace overid::cli

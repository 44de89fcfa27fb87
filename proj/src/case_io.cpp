#include "lmpf/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lmpf/errors.hpp"

namespace lmpf {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw InvalidInput(where + ": field '" + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw InvalidInput(where + ": field '" + key + "' must be finite");
  return d;
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number_integer()) throw InvalidInput(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

const json& array(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_array()) throw InvalidInput(where + ": field '" + key + "' must be an array");
  return v;
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return number(j, key, where);
}

CaseDelta parse_delta(const json& j, const std::string& where) {
  CaseDelta d;
  if (j.contains("line_limits")) {
    for (const auto& o : array(j, "line_limits", where)) {
      LineOverride lo;
      lo.line = integer(o, "line", where);
      if (o.contains("limit")) {
        double lim = number(o, "limit", where);
        lo.limit_min = -lim;
        lo.limit_max = lim;
      }
      if (auto v = optional_number(o, "limit_min", where)) lo.limit_min = v;
      if (auto v = optional_number(o, "limit_max", where)) lo.limit_max = v;
      d.line_limits.push_back(lo);
    }
  }
  if (j.contains("generator_limits")) {
    for (const auto& o : array(j, "generator_limits", where)) {
      GeneratorOverride go;
      go.generator = integer(o, "generator", where);
      go.p_min = optional_number(o, "p_min", where);
      go.p_max = optional_number(o, "p_max", where);
      d.generator_limits.push_back(go);
    }
  }
  auto ids = [&](const char* key, std::vector<int>& out) {
    if (!j.contains(key)) return;
    for (const auto& v : array(j, key, where)) {
      if (!v.is_number_integer()) throw InvalidInput(where + ": '" + key + "' entries must be line ids");
      out.push_back(v.get<int>());
    }
  };
  ids("line_outages", d.line_outages);
  ids("line_restorations", d.line_restorations);
  return d;
}

json delta_json(const CaseDelta& d) {
  json j = json::object();
  if (!d.line_limits.empty()) {
    json arr = json::array();
    for (const auto& o : d.line_limits) {
      json e{{"line", o.line}};
      if (o.limit_min) e["limit_min"] = *o.limit_min;
      if (o.limit_max) e["limit_max"] = *o.limit_max;
      arr.push_back(e);
    }
    j["line_limits"] = arr;
  }
  if (!d.generator_limits.empty()) {
    json arr = json::array();
    for (const auto& o : d.generator_limits) {
      json e{{"generator", o.generator}};
      if (o.p_min) e["p_min"] = *o.p_min;
      if (o.p_max) e["p_max"] = *o.p_max;
      arr.push_back(e);
    }
    j["generator_limits"] = arr;
  }
  if (!d.line_outages.empty()) j["line_outages"] = d.line_outages;
  if (!d.line_restorations.empty()) j["line_restorations"] = d.line_restorations;
  return j;
}

}  // namespace

CaseDocument load_case_document(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("case is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InvalidInput("case document must be a JSON object");

  static const std::set<std::string> known{"name",  "base_mva",         "buses",         "reference_bus",
                                           "lines", "generators",       "loads",         "stochastic_units",
                                           "cost_model", "schedule",    "contingencies"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!known.count(it.key())) throw InvalidInput("case: unknown top-level key '" + it.key() + "'");

  CaseDocument doc;
  GridCase& g = doc.grid;
  g.name = root.value("name", std::string{});
  g.base_mva = number_or(root, "base_mva", 100.0, "case");

  const json& buses = array(root, "buses", "case");
  std::set<int> bus_ids;
  for (const auto& b : buses) {
    int id = b.is_number_integer() ? b.get<int>() : integer(b, "id", "bus");
    if (!bus_ids.insert(id).second) throw InvalidInput("duplicate bus id " + std::to_string(id));
  }
  g.bus_count = static_cast<int>(bus_ids.size());
  if (g.bus_count == 0 || *bus_ids.begin() != 1 || *bus_ids.rbegin() != g.bus_count)
    throw InvalidInput("bus ids must be exactly 1..n");

  if (!root.contains("reference_bus")) throw InvalidInput("case: missing field 'reference_bus'");
  g.reference_bus = integer(root, "reference_bus", "case");

  for (const auto& l : array(root, "lines", "case")) {
    const std::string where = "line";
    Line line;
    line.id = integer(l, "id", where);
    line.from = integer(l, "from", where);
    line.to = integer(l, "to", where);
    line.reactance = number(l, "reactance", where);
    if (l.contains("limit")) {
      double lim = number(l, "limit", where);
      line.limit_min = -lim;
      line.limit_max = lim;
    } else {
      line.limit_min = number(l, "limit_min", where);
      line.limit_max = number(l, "limit_max", where);
    }
    line.in_service = l.value("in_service", true);
    g.lines.push_back(line);
  }

  bool any_quadratic = false;
  for (const auto& j : array(root, "generators", "case")) {
    const std::string where = "generator";
    Generator gen;
    gen.id = integer(j, "id", where);
    gen.bus = integer(j, "bus", where);
    gen.linear_cost = number(j, "linear_cost", where);
    gen.quadratic_cost = number_or(j, "quadratic_cost", 0.0, where);
    gen.p_min = number_or(j, "p_min", 0.0, where);
    gen.p_max = number(j, "p_max", where);
    any_quadratic = any_quadratic || gen.quadratic_cost != 0.0;
    g.generators.push_back(gen);
  }
  if (root.contains("cost_model")) {
    const std::string cm = root.at("cost_model").get<std::string>();
    if (cm == "linear") g.cost_kind = CostKind::Linear;
    else if (cm == "quadratic") g.cost_kind = CostKind::Quadratic;
    else throw InvalidInput("cost_model must be 'linear' or 'quadratic'");
  } else {
    g.cost_kind = any_quadratic ? CostKind::Quadratic : CostKind::Linear;
  }

  if (root.contains("loads")) {
    for (const auto& j : array(root, "loads", "case")) {
      FixedLoad l;
      l.bus = integer(j, "bus", "load");
      l.mw = number(j, "mw", "load");
      g.loads.push_back(l);
    }
  }
  if (root.contains("stochastic_units")) {
    for (const auto& j : array(root, "stochastic_units", "case")) {
      const std::string where = "stochastic unit";
      StochasticUnit u;
      u.id = integer(j, "id", where);
      u.bus = integer(j, "bus", where);
      const std::string kind = require(j, "kind", where).get<std::string>();
      if (kind == "load") u.kind = UnitKind::Load;
      else if (kind == "generation") u.kind = UnitKind::Generation;
      else throw InvalidInput("stochastic unit kind must be 'load' or 'generation'");
      u.min = number_or(j, "min", 0.0, where);
      u.max = number(j, "max", where);
      g.stochastic_units.push_back(u);
    }
  }
  validate(g);

  if (root.contains("schedule")) {
    for (const auto& j : array(root, "schedule", "case")) {
      ScheduleEntry e;
      e.time = integer(j, "time", "schedule");
      e.delta = parse_delta(j, "schedule");
      doc.schedule.entries.push_back(std::move(e));
    }
    validate(doc.schedule);
    // Every prefix of the schedule must produce a valid case.
    GridCase cur = g;
    for (const auto& e : doc.schedule.entries) cur = apply_delta(cur, e.delta);
  }
  if (root.contains("contingencies")) {
    for (const auto& j : array(root, "contingencies", "case")) {
      Contingency c;
      c.name = j.value("name", std::string{});
      c.probability = number(j, "probability", "contingency");
      c.delta = parse_delta(j, "contingency");
      doc.contingencies.contingencies.push_back(std::move(c));
    }
    validate(doc.contingencies);
    for (int k = 1; k < doc.contingencies.configuration_count(); ++k) apply_contingency(g, doc.contingencies, k);
  }
  return doc;
}

GridCase load_case(const std::string& text) { return load_case_document(text).grid; }

std::string save_case_document(const CaseDocument& doc) {
  const GridCase& g = doc.grid;
  json root;
  root["name"] = g.name;
  root["base_mva"] = g.base_mva;
  root["reference_bus"] = g.reference_bus;
  root["cost_model"] = g.cost_kind == CostKind::Linear ? "linear" : "quadratic";
  json buses = json::array();
  for (int b = 1; b <= g.bus_count; ++b) buses.push_back(json{{"id", b}});
  root["buses"] = buses;
  json lines = json::array();
  for (const auto& l : g.lines)
    lines.push_back(json{{"id", l.id},
                         {"from", l.from},
                         {"to", l.to},
                         {"reactance", l.reactance},
                         {"limit_min", l.limit_min},
                         {"limit_max", l.limit_max},
                         {"in_service", l.in_service}});
  root["lines"] = lines;
  json gens = json::array();
  for (const auto& x : g.generators)
    gens.push_back(json{{"id", x.id},
                        {"bus", x.bus},
                        {"linear_cost", x.linear_cost},
                        {"quadratic_cost", x.quadratic_cost},
                        {"p_min", x.p_min},
                        {"p_max", x.p_max}});
  root["generators"] = gens;
  json loads = json::array();
  for (const auto& l : g.loads) loads.push_back(json{{"bus", l.bus}, {"mw", l.mw}});
  root["loads"] = loads;
  json units = json::array();
  for (const auto& u : g.stochastic_units)
    units.push_back(json{{"id", u.id},
                         {"bus", u.bus},
                         {"kind", u.kind == UnitKind::Load ? "load" : "generation"},
                         {"min", u.min},
                         {"max", u.max}});
  root["stochastic_units"] = units;
  if (!doc.schedule.entries.empty()) {
    json arr = json::array();
    for (const auto& e : doc.schedule.entries) {
      json j = delta_json(e.delta);
      j["time"] = e.time;
      arr.push_back(j);
    }
    root["schedule"] = arr;
  }
  if (!doc.contingencies.contingencies.empty()) {
    json arr = json::array();
    for (const auto& c : doc.contingencies.contingencies) {
      json j = delta_json(c.delta);
      j["name"] = c.name;
      j["probability"] = c.probability;
      arr.push_back(j);
    }
    root["contingencies"] = arr;
  }
  return root.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CaseDocument read_case_file(const std::string& path) { return load_case_document(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw InvalidInput("failed writing '" + path + "'");
    }
  }
  fs::rename(tmp, target);
}

}  // namespace lmpf

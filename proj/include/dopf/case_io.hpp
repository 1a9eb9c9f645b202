#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dopf/case.hpp"

namespace dopf {

enum class CaseFormat { MatpowerM, NativeJson };

namespace detail {

// --- MATPOWER .m subset -----------------------------------------------------
//
// Supports the matrix blocks mpc.baseMVA, mpc.bus, mpc.gen, mpc.gencost and
// mpc.branch. Everything else ('function', 'mpc.version', comments) is
// ignored.

struct MatpowerDoc {
  double base_mva = 100.0;
  std::map<std::string, std::vector<std::vector<double>>> tables;
};

inline MatpowerDoc parse_matpower_text(std::istream& in) {
  MatpowerDoc doc;
  std::string line;
  int lineno = 0;
  std::string block;  // active table name, empty outside a matrix block
  auto fail = [&](const std::string& msg, int col) {
    throw CaseError("matpower syntax error at line " + std::to_string(lineno) +
                    ", column " + std::to_string(col) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('%'); pos != std::string::npos) line.erase(pos);
    std::string_view sv(line);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    sv = trim(sv);
    if (sv.empty()) continue;
    if (block.empty()) {
      if (sv.substr(0, 4) != "mpc.") continue;
      auto eq = sv.find('=');
      if (eq == std::string_view::npos) continue;
      std::string name(trim(sv.substr(4, eq - 4)));
      std::string_view rhs = trim(sv.substr(eq + 1));
      if (name == "baseMVA") {
        try {
          doc.base_mva = std::stod(std::string(rhs));
        } catch (const std::exception&) {
          fail("bad baseMVA value", static_cast<int>(eq + 2));
        }
        continue;
      }
      if (name == "version") continue;
      if (rhs.substr(0, 1) == "[") {
        block = name;
        doc.tables[block];
        sv = trim(rhs.substr(1));
        if (sv.empty()) continue;
        // fall through to row parsing below
      } else {
        continue;
      }
    }
    // inside a matrix block: rows are whitespace-separated numbers ending
    // with ';', the block ends with '];'
    bool closes = false;
    if (auto pos = sv.find(']'); pos != std::string_view::npos) {
      closes = true;
      sv = trim(sv.substr(0, pos));
    }
    if (!sv.empty()) {
      std::vector<double> row;
      std::string cell;
      std::istringstream rs{std::string(sv)};
      while (rs >> cell) {
        if (!cell.empty() && cell.back() == ';') cell.pop_back();
        if (cell.empty()) continue;
        try {
          size_t used = 0;
          row.push_back(std::stod(cell, &used));
          if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          fail("bad numeric token '" + cell + "'",
               static_cast<int>(line.find(cell)) + 1);
        }
      }
      if (!row.empty()) doc.tables[block].push_back(std::move(row));
    }
    if (closes) block.clear();
  }
  if (!block.empty())
    throw CaseError("matpower syntax error: unterminated block mpc." + block);
  return doc;
}

inline CaseData matpower_to_case(const MatpowerDoc& doc) {
  CaseData cd;
  cd.base_mva = doc.base_mva;
  const double base = cd.base_mva;
  auto table = [&](const std::string& name) -> const std::vector<std::vector<double>>& {
    auto it = doc.tables.find(name);
    if (it == doc.tables.end()) throw CaseError("missing mpc." + name + " table");
    return it->second;
  };
  for (const auto& row : table("bus")) {
    if (row.size() < 13) throw CaseError("bus row with fewer than 13 columns");
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.p_demand = row[2] / base;
    b.q_demand = row[3] / base;
    b.v_max = row[11];
    b.v_min = row[12];
    cd.buses.push_back(b);
  }
  auto bus_ref = [&](int id) -> Bus& {
    for (auto& b : cd.buses)
      if (b.id == id) return b;
    throw CaseError("gen/branch references unknown bus " + std::to_string(id));
  };
  const auto& gens = table("gen");
  const auto* gencost = doc.tables.count("gencost") ? &doc.tables.at("gencost") : nullptr;
  if (gencost && gencost->size() != gens.size())
    throw CaseError("gencost row count does not match gen row count");
  for (size_t gi = 0; gi < gens.size(); ++gi) {
    const auto& row = gens[gi];
    if (row.size() < 10) throw CaseError("gen row with fewer than 10 columns");
    if (row[7] <= 0) continue;  // out of service
    Bus& b = bus_ref(static_cast<int>(row[0]));
    b.is_generator = true;
    b.q_max += row[3] / base;
    b.q_min += row[4] / base;
    b.p_max += row[8] / base;
    b.p_min += row[9] / base;
    if (gencost) {
      const auto& c = (*gencost)[gi];
      if (c.size() < 4) throw CaseError("gencost row with fewer than 4 columns");
      if (static_cast<int>(c[0]) != 2)
        throw CaseError("only polynomial gencost (model 2) is supported");
      int n = static_cast<int>(c[3]);
      if (c.size() < 4 + static_cast<size_t>(n))
        throw CaseError("gencost row shorter than its declared order");
      // highest-order coefficient first; accept n in {2,3}
      double c2 = 0, c1 = 0;
      if (n >= 3) c2 = c[c.size() - n];
      if (n >= 2) c1 = c[c.size() - 2];
      // Coefficients apply to per-unit generation as-is. Rescaling them by
      // the MVA base would inflate the dual variables a hundredfold and with
      // them the penalty values the iteration counts are calibrated against.
      b.cost_c2 += c2;
      b.cost_c1 += c1;
    }
  }
  // Parallel branches aggregate into one simple edge by admittance summation.
  std::map<std::pair<int, int>, Branch> agg;
  for (const auto& row : table("branch")) {
    if (row.size() < 11) throw CaseError("branch row with fewer than 11 columns");
    if (row[10] <= 0) continue;  // out of service
    int f = static_cast<int>(row[0]);
    int t = static_cast<int>(row[1]);
    bus_ref(f);
    bus_ref(t);
    std::complex<double> z(row[2], row[3]);
    if (z == 0.0) throw CaseError("branch with zero impedance");
    auto key = std::minmax(f, t);
    auto [it, inserted] = agg.try_emplace({key.first, key.second});
    Branch& br = it->second;
    if (inserted) {
      br.from_bus = key.first;
      br.to_bus = key.second;
    }
    br.series_admittance += 1.0 / z;
    br.shunt_susceptance += row[4];
  }
  for (auto& [key, br] : agg) cd.branches.push_back(br);
  validate_case(cd);
  return cd;
}

}  // namespace detail

inline CaseData parse_case(std::istream& in, CaseFormat format) {
  if (format == CaseFormat::MatpowerM)
    return detail::matpower_to_case(detail::parse_matpower_text(in));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CaseError(std::string("json syntax error: ") + e.what());
  }
  CaseData cd;
  try {
    cd.base_mva = j.at("base_mva").get<double>();
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.is_generator = jb.at("gen").get<bool>();
      b.p_demand = jb.at("pd").get<double>();
      b.q_demand = jb.at("qd").get<double>();
      b.p_min = jb.at("pmin").get<double>();
      b.p_max = jb.at("pmax").get<double>();
      b.q_min = jb.at("qmin").get<double>();
      b.q_max = jb.at("qmax").get<double>();
      b.v_min = jb.at("vmin").get<double>();
      b.v_max = jb.at("vmax").get<double>();
      b.cost_c2 = jb.at("c2").get<double>();
      b.cost_c1 = jb.at("c1").get<double>();
      cd.buses.push_back(b);
    }
    for (const auto& jr : j.at("branches")) {
      Branch br;
      br.from_bus = jr.at("from").get<int>();
      br.to_bus = jr.at("to").get<int>();
      br.series_admittance = {jr.at("g").get<double>(), jr.at("b").get<double>()};
      br.shunt_susceptance = jr.at("bc").get<double>();
      const auto& vd = jr.at("vdmax");
      br.vdiff_max = vd.is_null() ? std::numeric_limits<double>::infinity()
                                  : vd.get<double>();
      cd.branches.push_back(br);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CaseError(std::string("json schema error: ") + e.what());
  }
  validate_case(cd);
  return cd;
}

inline CaseData parse_case(const std::string& text, CaseFormat format) {
  std::istringstream in(text);
  return parse_case(in, format);
}

inline void emit_case(const CaseData& cd, std::ostream& out) {
  nlohmann::json j;
  j["base_mva"] = cd.base_mva;
  j["buses"] = nlohmann::json::array();
  for (const auto& b : cd.buses) {
    j["buses"].push_back({{"id", b.id},
                          {"gen", b.is_generator},
                          {"pd", b.p_demand},
                          {"qd", b.q_demand},
                          {"pmin", b.p_min},
                          {"pmax", b.p_max},
                          {"qmin", b.q_min},
                          {"qmax", b.q_max},
                          {"vmin", b.v_min},
                          {"vmax", b.v_max},
                          {"c2", b.cost_c2},
                          {"c1", b.cost_c1}});
  }
  j["branches"] = nlohmann::json::array();
  for (const auto& br : cd.branches) {
    nlohmann::json jr = {{"from", br.from_bus},
                         {"to", br.to_bus},
                         {"g", br.series_admittance.real()},
                         {"b", br.series_admittance.imag()},
                         {"bc", br.shunt_susceptance}};
    if (std::isinf(br.vdiff_max))
      jr["vdmax"] = nullptr;
    else
      jr["vdmax"] = br.vdiff_max;
    j["branches"].push_back(jr);
  }
  out << j.dump(2) << '\n';
}

inline std::string emit_case(const CaseData& cd) {
  std::ostringstream out;
  emit_case(cd, out);
  return out.str();
}

}  // namespace dopf

#pragma once

// JSON and CSV serialization. JSON goes through nlohmann::json; CSV numbers
// use std::to_chars (shortest round-trip, no locale).

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "arbor/capacity.hpp"
#include "arbor/tree_spec.hpp"
#include "arbor/wiener.hpp"

namespace arbor::io {

using nlohmann::json;

inline std::string_view kind_name(TreeSpec::Kind k) {
  switch (k) {
    case TreeSpec::Kind::homogeneous: return "homogeneous";
    case TreeSpec::Kind::spherical: return "spherical";
    case TreeSpec::Kind::explicit_shape: return "explicit";
    case TreeSpec::Kind::counterexample: return "counterexample";
  }
  return "homogeneous";
}

inline json shape_to_json(const NestedShape& s) {
  json sons = json::array();
  for (const NestedShape& c : s.sons) sons.push_back(shape_to_json(c));
  return sons;
}

inline NestedShape shape_from_json(const json& j, int depth = 0) {
  if (!j.is_array()) throw StructuralError("explicit tree children must be nested arrays");
  if (depth > 100000) throw StructuralError("explicit tree nesting too deep");
  NestedShape s;
  for (const json& c : j) s.sons.push_back(shape_from_json(c, depth + 1));
  return s;
}

inline json to_json(const TreeSpec& spec) {
  json j{{"kind", kind_name(spec.kind)}};
  switch (spec.kind) {
    case TreeSpec::Kind::homogeneous:
    case TreeSpec::Kind::spherical:
      j["degrees"] = spec.degrees;
      j["depth"] = spec.depth;
      break;
    case TreeSpec::Kind::explicit_shape:
      j["children"] = shape_to_json(spec.shape);
      break;
    case TreeSpec::Kind::counterexample:
      j["spine_depth"] = spec.spine_depth;
      j["depth"] = spec.depth;
      break;
  }
  return j;
}

inline TreeSpec tree_spec_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    TreeSpec s;
    if (kind == "homogeneous") {
      const auto d = j.at("degrees").get<std::vector<int>>();
      if (d.size() != 1) throw ParameterError("homogeneous trees take exactly one degree");
      s = TreeSpec::homogeneous(d[0], j.at("depth").get<int>());
    } else if (kind == "spherical") {
      s = TreeSpec::spherical(j.at("degrees").get<std::vector<int>>(), j.at("depth").get<int>());
    } else if (kind == "explicit") {
      s = TreeSpec::explicit_tree(shape_from_json(j.at("children")));
    } else if (kind == "counterexample") {
      s = TreeSpec::counterexample(j.at("spine_depth").get<int>(), j.value("depth", 1));
    } else {
      throw ParameterError("unknown tree kind '" + kind + "'");
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad tree spec: ") + e.what());
  }
}

inline json to_json(const SetRule& rule) {
  if (rule.full) return "full";
  return rule.tents;
}

inline SetRule set_rule_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "full") return SetRule::whole();
  try {
    return SetRule::of_tents(j.get<std::vector<std::vector<std::size_t>>>());
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad boundary set: ") + e.what());
  }
}

template <class Tag>
json to_json(const IndexedFn<Tag>& f) {
  return std::vector<double>(f.begin(), f.end());
}

inline json to_json(const Charge& mu) { return std::vector<double>(mu.masses().begin(), mu.masses().end()); }

inline Charge charge_from_json(const json& j) {
  try {
    return Charge(j.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad charge: ") + e.what());
  }
}

inline json to_json(const EquilibriumResult& r) {
  std::vector<EdgeId> members(r.set.members().begin(), r.set.members().end());
  return json{{"capacity", r.capacity}, {"p", r.p.p()},          {"solver", r.solver}, {"tol", r.tol},
              {"set", members},        {"eq_fn", to_json(r.eq_fn)}, {"eq_measure", to_json(r.eq_measure)}};
}

inline json to_json(const WienerReport& r) {
  return json{{"levels", r.levels},
              {"c", r.c_seq},
              {"t", r.t_seq},
              {"partial_sums", r.partial_sums},
              {"product", r.product_seq},
              {"epsilon", r.epsilon},
              {"verdict", to_string(r.verdict)},
              {"status", r.status},
              {"telescoping_residual", r.telescoping_residual()}};
}

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Comma-separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw ParameterError("CSV row width does not match the header");
    rows_.push_back(row);
  }
  std::size_t rows() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format_number(row[i]);
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Writes to a sibling temporary and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ParameterError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ParameterError("cannot move report into place at '" + path.string() + "'");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace arbor::io

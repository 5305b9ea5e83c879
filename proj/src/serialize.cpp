#include "splitknock/serialize.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <memory>

#include "splitknock/errors.hpp"

#ifndef SPLITKNOCK_VERSION
#define SPLITKNOCK_VERSION "0.0.0"
#endif

namespace splitknock::serialize {
namespace {

void dump_into(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_into(v, indent, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) {
        out += format_double(v);
      } else {
        out += '"' + format_double(v) + '"';
      }
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

template <typename Vec>
Json vector_json(const Vec& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(static_cast<double>(v(i)));
  return a;
}

Json index_json(const std::vector<Index>& idx) {
  Json a = Json::array();
  for (const Index i : idx) a.push_back(i + 1);
  return a;
}

Vector vector_from(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number_from_json(j[i]);
  return v;
}

std::vector<Index> index_from(const Json& j) {
  std::vector<Index> out;
  for (const auto& v : j) out.push_back(v.get<Index>() - 1);
  return out;
}

}  // namespace

std::string_view library_version() noexcept { return SPLITKNOCK_VERSION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump(const Json& j, int indent) {
  std::string out;
  dump_into(j, indent, 0, out);
  return out;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorKind::ParseError, "expected a number, found " + j.dump());
}

Json to_json(const SplitConfig& c) {
  Json j = Json::object();
  j["nu"] = c.nu;
  j["q"] = c.q;
  j["plus"] = c.plus;
  j["n1"] = c.n1;
  j["lambda_count"] = c.lambda_count;
  j["lambda_min_ratio"] = c.lambda_min_ratio;
  j["seed"] = c.seed;
  j["s_method"] = "equicorrelated";
  j["refine_bisection_steps"] = c.refine_bisection_steps;
  j["allow_nonconverged"] = c.allow_nonconverged;
  j["first_n1_split"] = c.first_n1_split;
  return j;
}

SplitConfig config_from_json(const Json& j) {
  SplitConfig c;
  c.nu = number_from_json(j.at("nu"));
  c.q = number_from_json(j.at("q"));
  c.plus = j.at("plus").get<bool>();
  c.n1 = j.at("n1").get<Index>();
  c.lambda_count = j.at("lambda_count").get<Index>();
  c.lambda_min_ratio = number_from_json(j.at("lambda_min_ratio"));
  c.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("s_method").get<std::string>() != "equicorrelated") {
    throw Error(ErrorKind::ParseError, "unknown s_method " + j.at("s_method").dump());
  }
  c.refine_bisection_steps = j.at("refine_bisection_steps").get<int>();
  c.allow_nonconverged = j.at("allow_nonconverged").get<bool>();
  c.first_n1_split = j.at("first_n1_split").get<bool>();
  return c;
}

Json to_json(const SelectionResult& r) {
  Json j = Json::object();
  j["schema"] = std::string(kSchema);
  j["W"] = vector_json(r.W);
  j["Z"] = vector_json(r.Z);
  j["Z_tilde"] = vector_json(r.Z_tilde);
  Json rj = Json::array();
  for (Index i = 0; i < r.r.size(); ++i) rj.push_back(r.r(i));
  j["r"] = rj;
  j["T"] = r.T;
  j["selected"] = index_json(r.selected);
  Json signs = Json::object();
  for (std::size_t k = 0; k < r.selected.size(); ++k) signs[std::to_string(r.selected[k] + 1)] = r.signs[k];
  j["signs"] = signs;
  j["coordinates"] = index_json(r.coordinates);
  j["config"] = to_json(r.config);
  const auto& d = r.diagnostics;
  Json dj = Json::object();
  Json conv = Json::array();
  for (const bool c : d.converged) conv.push_back(c);
  dj["converged"] = conv;
  dj["s"] = vector_json(d.s);
  dj["nu"] = d.nu;
  dj["lambda_max"] = d.lambda_max;
  dj["nonconverged_refinements"] = d.nonconverged_refinements;
  dj["sample_split"] = d.sample_split;
  dj["idx1"] = index_json(d.idx1);
  dj["idx2"] = index_json(d.idx2);
  dj["screened_beta"] = index_json(d.screened_beta);
  j["diagnostics"] = dj;
  return j;
}

SelectionResult selection_from_json(const Json& j) {
  if (!j.contains("schema") || j.at("schema").get<std::string>() != kSchema) {
    throw Error(ErrorKind::ParseError, "missing or unsupported schema; expected " + std::string(kSchema));
  }
  SelectionResult r;
  r.W = vector_from(j.at("W"));
  r.Z = vector_from(j.at("Z"));
  r.Z_tilde = vector_from(j.at("Z_tilde"));
  const auto& rj = j.at("r");
  r.r.resize(static_cast<Index>(rj.size()));
  for (std::size_t i = 0; i < rj.size(); ++i) r.r(static_cast<Index>(i)) = rj[i].get<int>();
  r.T = number_from_json(j.at("T"));
  r.selected = index_from(j.at("selected"));
  for (const Index i : r.selected) r.signs.push_back(j.at("signs").at(std::to_string(i + 1)).get<int>());
  r.coordinates = index_from(j.at("coordinates"));
  r.config = config_from_json(j.at("config"));
  const auto& dj = j.at("diagnostics");
  auto& d = r.diagnostics;
  for (const auto& c : dj.at("converged")) d.converged.push_back(c.get<bool>());
  d.s = vector_from(dj.at("s"));
  d.nu = number_from_json(dj.at("nu"));
  d.lambda_max = number_from_json(dj.at("lambda_max"));
  d.nonconverged_refinements = dj.at("nonconverged_refinements").get<int>();
  d.sample_split = dj.at("sample_split").get<bool>();
  d.idx1 = index_from(dj.at("idx1"));
  d.idx2 = index_from(dj.at("idx2"));
  d.screened_beta = index_from(dj.at("screened_beta"));
  return r;
}

Json to_json(const CopyResiduals& c) {
  Json j = Json::object();
  j["gram"] = c.gram;
  j["cross"] = c.cross;
  j["self"] = c.self;
  j["bottom_block"] = c.bottom_block;
  j["converts_x2"] = c.converts_x2;
  j["top_gram"] = c.top_gram;
  return j;
}

Json to_json(const RunManifest& m) {
  Json j = Json::object();
  j["command"] = m.command;
  j["config"] = m.config;
  Json digests = Json::object();
  for (const auto& [path, hex] : m.input_digests) digests[path] = hex;
  j["input_digests"] = digests;
  j["version"] = m.version;
  j["schema"] = std::string(kSchema);
  j["seed"] = m.seed;
  j["wall_clock"] = m.wall_clock;
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorKind::InternalInvariantViolation, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_tidy_csv(const ExperimentReport& report, std::ostream& out) {
  out << "scenario,mode,variant,log10_nu,replicate,fdp_dir,mfdp,power,n_selected,threshold\n";
  const std::string prefix = report.spec.scenario + "," + std::string(to_string(report.spec.mode)) + ",";
  for (const auto& rec : report.records) {
    for (const Variant v : {Variant::Knockoff, Variant::KnockoffPlus}) {
      out << prefix << to_string(v) << ',' << format_double(std::log10(rec.nu)) << ',' << rec.replicate << ',';
      if (rec.failed) {
        out << "NaN,NaN,NaN,NaN,NaN\n";
        continue;
      }
      const VariantMetrics& m = rec.metrics(v);
      out << format_double(m.fdp_dir) << ',' << format_double(m.mfdp_dir) << ',' << format_double(m.power)
          << ',' << m.n_selected << ',' << format_double(m.threshold) << '\n';
    }
  }
}

void write_aggregate_csv(const ExperimentReport& report, std::ostream& out) {
  out << "scenario,mode,variant,log10_nu,n_ok,n_failed,"
         "fdp_dir_mean,fdp_dir_sd,fdp_dir_lo,fdp_dir_hi,mfdp_mean,mfdp_sd,"
         "power_mean,power_sd,power_lo,power_hi,n_selected_mean,n_selected_sd\n";
  const std::string prefix = report.spec.scenario + "," + std::string(to_string(report.spec.mode)) + ",";
  for (const auto& s : report.summaries) {
    out << prefix << to_string(s.variant) << ','
        << (report.spec.cv_nu ? std::string("cv") : format_double(std::log10(s.nu))) << ',' << s.n_ok << ','
        << s.n_failed << ',' << format_double(s.fdp_dir.mean) << ',' << format_double(s.fdp_dir.sd) << ','
        << format_double(s.fdp_dir.lo) << ',' << format_double(s.fdp_dir.hi) << ','
        << format_double(s.mfdp_dir.mean) << ',' << format_double(s.mfdp_dir.sd) << ','
        << format_double(s.power.mean) << ',' << format_double(s.power.sd) << ','
        << format_double(s.power.lo) << ',' << format_double(s.power.hi) << ','
        << format_double(s.n_selected.mean) << ',' << format_double(s.n_selected.sd) << '\n';
  }
}

}  // namespace splitknock::serialize

#include "affdim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "affdim/error.hpp"

namespace affdim {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::Malformed, field + ": " + why);
}

double number_at(const json& v, const std::string& field) {
  if (!v.is_number()) malformed(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) malformed(field, "not finite");
  return x;
}

std::vector<double> vector_at(const json& v, const std::string& field) {
  if (!v.is_array()) malformed(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> rows_at(const json& v, const std::string& field) {
  if (!v.is_array()) malformed(field, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vector_at(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::uint64_t unsigned_at(const json& v, const std::string& field) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    malformed(field, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

void check_known_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (auto key : keys) known = known || k == key;
    if (!known) malformed(where.empty() ? k : where + "." + k, "unknown field");
  }
}

}  // namespace

SystemConfig parse_config(const json& doc) {
  if (!doc.is_object()) malformed("<root>", "expected a JSON object");
  check_known_keys(doc, {"dimension", "maps", "subshift", "measure", "budgets", "seed"}, "");

  SystemConfig cfg;
  if (!doc.contains("dimension")) malformed("dimension", "missing");
  cfg.dimension = static_cast<std::size_t>(unsigned_at(doc["dimension"], "dimension"));
  if (cfg.dimension < 1) malformed("dimension", "must be at least 1");
  const std::size_t d = cfg.dimension;

  if (!doc.contains("maps") || !doc["maps"].is_array()) malformed("maps", "expected an array");
  const json& maps = doc["maps"];
  if (maps.size() < 2) malformed("maps", "need at least 2 maps");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::string where = "maps[" + std::to_string(i) + "]";
    if (!maps[i].is_object()) malformed(where, "expected an object");
    check_known_keys(maps[i], {"matrix", "translation"}, where);
    if (!maps[i].contains("matrix")) malformed(where + ".matrix", "missing");
    const auto rows = rows_at(maps[i]["matrix"], where + ".matrix");
    if (rows.size() != d) malformed(where + ".matrix", "expected " + std::to_string(d) + " rows");
    for (const auto& r : rows) {
      if (r.size() != d) malformed(where + ".matrix", "expected " + std::to_string(d) + " columns");
    }
    const Matrix m = Matrix::from_rows(rows);
    const double det = log_abs_det(m);
    if (!std::isfinite(det)) malformed(where + ".matrix", "singular");
    const double norm = std::exp(singular_spectrum(m).log_alphas.front());
    if (!(norm < 1.0)) {
      throw Error(ErrorCode::NonContractive, where + ".matrix: map " + std::to_string(i) + " has norm " +
                                                 std::to_string(norm) + " >= 1");
    }
    cfg.ifs.matrices.push_back(m);
    std::vector<double> a(d, 0.0);
    if (maps[i].contains("translation")) {
      a = vector_at(maps[i]["translation"], where + ".translation");
      if (a.size() != d) malformed(where + ".translation", "expected " + std::to_string(d) + " entries");
    }
    cfg.ifs.translations.push_back(std::move(a));
  }
  const std::size_t k = maps.size();

  cfg.subshift = SubshiftSpec::full_shift(k);
  if (doc.contains("subshift")) {
    const json& sub = doc["subshift"];
    if (!sub.is_object()) malformed("subshift", "expected an object");
    check_known_keys(sub, {"forbidden_words"}, "subshift");
    if (sub.contains("forbidden_words")) {
      const json& words = sub["forbidden_words"];
      if (!words.is_array()) malformed("subshift.forbidden_words", "expected an array of words");
      for (std::size_t i = 0; i < words.size(); ++i) {
        const std::string where = "subshift.forbidden_words[" + std::to_string(i) + "]";
        if (!words[i].is_array()) malformed(where, "expected an array of letters");
        Word w;
        for (const auto& letter : words[i]) {
          if (!letter.is_number_integer() || letter.get<std::int64_t>() < 0 ||
              letter.get<std::uint64_t>() >= k) {
            throw Error(ErrorCode::BadSubshift, where + ": letters must be integers in [0, " + std::to_string(k) + ")");
          }
          w.push_back(letter.get<Letter>());
        }
        if (w.size() < 2) throw Error(ErrorCode::BadSubshift, where + ": forbidden words need length >= 2");
        cfg.subshift.forbidden_words.push_back(std::move(w));
      }
    }
    cfg.subshift = cfg.subshift.normalized();
    // surfaces EmptySubshift at parse time
    (void)SubshiftAutomaton::compile(cfg.subshift);
  }

  if (doc.contains("measure")) {
    const json& m = doc["measure"];
    if (!m.is_object()) malformed("measure", "expected an object");
    check_known_keys(m, {"type", "p", "transition", "stationary"}, "measure");
    if (!m.contains("type") || !m["type"].is_string()) malformed("measure.type", "expected \"bernoulli\" or \"markov\"");
    MeasureConfig mc;
    mc.type = m["type"].get<std::string>();
    if (mc.type == "bernoulli") {
      if (!m.contains("p")) malformed("measure.p", "missing");
      mc.p = vector_at(m["p"], "measure.p");
      if (mc.p.size() != k) malformed("measure.p", "expected " + std::to_string(k) + " probabilities");
      try {
        BernoulliMeasure probe(mc.p);
      } catch (const Error& e) {
        malformed("measure.p", e.what());
      }
    } else if (mc.type == "markov") {
      if (!m.contains("transition")) malformed("measure.transition", "missing");
      mc.transition = rows_at(m["transition"], "measure.transition");
      if (mc.transition.size() != k) malformed("measure.transition", "expected " + std::to_string(k) + " rows");
      if (m.contains("stationary")) mc.stationary = vector_at(m["stationary"], "measure.stationary");
      try {
        MarkovMeasure probe(mc.transition, mc.stationary);
        probe.check_support(SubshiftAutomaton::compile(cfg.subshift));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::BadSubshift) throw Error(ErrorCode::BadSubshift, std::string("measure.transition: ") + e.what());
        malformed("measure.transition", e.what());
      }
    } else {
      malformed("measure.type", "expected \"bernoulli\" or \"markov\"");
    }
    cfg.measure = std::move(mc);
  }

  if (doc.contains("budgets")) {
    const json& b = doc["budgets"];
    if (!b.is_object()) malformed("budgets", "expected an object");
    check_known_keys(b, {"max_depth", "max_words"}, "budgets");
    if (b.contains("max_depth")) cfg.budgets.max_depth = static_cast<std::size_t>(unsigned_at(b["max_depth"], "budgets.max_depth"));
    if (b.contains("max_words")) cfg.budgets.max_words = unsigned_at(b["max_words"], "budgets.max_words");
  }
  if (doc.contains("seed")) cfg.seed = unsigned_at(doc["seed"], "seed");
  return cfg;
}

SystemConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    malformed("<input>", e.what());
  }
  return parse_config(doc);
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) malformed(path.string(), "cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

SystemConfig config_from_fixture(const Fixture& fixture) {
  SystemConfig cfg;
  cfg.dimension = fixture.ifs.dim();
  cfg.ifs = fixture.ifs;
  cfg.subshift = fixture.subshift.normalized();
  if (fixture.bernoulli) cfg.measure = MeasureConfig{"bernoulli", *fixture.bernoulli, {}, std::nullopt};
  return cfg;
}

nlohmann::json SystemConfig::canonical() const {
  json maps = json::array();
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    json rows = json::array();
    for (std::size_t r = 0; r < dimension; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < dimension; ++c) row.push_back(ifs.matrices[i](r, c));
      rows.push_back(row);
    }
    maps.push_back({{"matrix", rows}, {"translation", ifs.translations[i]}});
  }
  json forbidden = json::array();
  for (const auto& w : subshift.forbidden_words) forbidden.push_back(w);
  json doc = {{"dimension", dimension},
              {"maps", maps},
              {"subshift", {{"forbidden_words", forbidden}}},
              {"budgets", {{"max_depth", budgets.max_depth}, {"max_words", budgets.max_words}}},
              {"seed", seed}};
  if (measure) {
    json m = {{"type", measure->type}};
    if (measure->type == "bernoulli") m["p"] = measure->p;
    if (measure->type == "markov") {
      m["transition"] = measure->transition;
      if (measure->stationary) m["stationary"] = *measure->stationary;
    }
    doc["measure"] = m;
  }
  return doc;
}

std::string SystemConfig::digest() const {
  const std::string text = canonical().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::unique_ptr<CylinderMeasure> make_measure(const SystemConfig& config, const SubshiftAutomaton& automaton) {
  if (!config.measure) throw Error(ErrorCode::InvalidArgument, "measure: this command needs a configured measure");
  const MeasureConfig& m = *config.measure;
  if (m.type == "bernoulli") return std::make_unique<BernoulliMeasure>(m.p);
  auto markov = std::make_unique<MarkovMeasure>(m.transition, m.stationary);
  markov->check_support(automaton);
  return markov;
}

}  // namespace affdim

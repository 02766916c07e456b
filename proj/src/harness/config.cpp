#include "faktlab/harness/config.hpp"

#include <algorithm>
#include <set>

#include "faktlab/error.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::harness {

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.world.distractor_skew = 2.0;
  c.world.probe_exemplar_rate = 0.3;
  c.model.embed_dim = 48;
  c.pretrain.epochs = 40;
  c.pretrain.learning_rate = 4e-3;
  c.losses.assign(std::begin(preflosses::kAllLosses), std::end(preflosses::kAllLosses));
  c.train.learning_rate = 1e-5;
  return c;
}

void ExperimentConfig::validate() const {
  world.validate();
  pretrain.validate();
  loss.validate();
  train.validate();
  detection.validate();
  auto m = model;
  m.vocab_size = std::max<std::size_t>(m.vocab_size, 8);
  m.validate();
  if (prefs.preference_entities == 0 || prefs.preference_entities >= world.num_entities)
    fail(ErrorKind::Config, "prefs.preference_entities must lie in [1, num_entities)");
  if (prefs.responses_per_prompt < 2) fail(ErrorKind::Config, "prefs.responses_per_prompt must be >= 2");
  if (!(prefs.temperature > 0.0)) fail(ErrorKind::Config, "prefs.temperature must be positive");
  if (prefs.max_len == 0 || eval.max_len == 0 || shift.max_len == 0)
    fail(ErrorKind::Config, "max_len values must be positive");
  if (losses.empty()) fail(ErrorKind::Config, "losses must name at least one loss");
  const auto& f = sweeps.quantity_fractions;
  if (f.empty() || !std::is_sorted(f.begin(), f.end()) || f.front() <= 0.0 || f.back() > 1.0)
    fail(ErrorKind::Config, "sweeps.quantity_fractions must be ascending within (0, 1]");
}

std::uint64_t component_seed(std::uint64_t master, std::string_view component) {
  return Rng(master).split("component").split(component).key();
}

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const io::Json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(ErrorKind::Config, where("") + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const io::Json* v = take(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const io::Json::exception&) {
      fail(ErrorKind::Config, where(key) + " has the wrong type");
    }
  }

  template <class Parse, class T>
  void parsed(const char* key, T& out, Parse parse) {
    const io::Json* v = take(key);
    if (!v) return;
    if (!v->is_string()) fail(ErrorKind::Config, where(key) + " must be a string");
    try {
      out = parse(v->get<std::string>());
    } catch (const Error& e) {
      fail(ErrorKind::Config, where(key) + ": " + e.what());
    }
  }

  Section child(const char* key) { return Section(take(key), joined(key)); }

  const io::Json* take(const char* key) {
    if (!j_ || !j_->contains(key)) return nullptr;
    seen_.insert(key);
    return &j_->at(key);
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, _] : j_->items())
      if (!seen_.count(k)) fail(ErrorKind::Config, "unknown config key " + where(k));
  }

 private:
  std::string joined(const std::string& key) const {
    return path_ + (path_.empty() || key.empty() ? "" : ".") + key;
  }
  std::string where(const std::string& key) const { return "'" + joined(key) + "'"; }

  const io::Json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

tokenshift::ShiftBasis parse_basis(const std::string& s) {
  if (s == "signed") return tokenshift::ShiftBasis::Signed;
  if (s == "absolute") return tokenshift::ShiftBasis::Absolute;
  fail(ErrorKind::Config, "basis must be 'signed' or 'absolute'");
}

}  // namespace

io::Json config_to_json(const ExperimentConfig& c) {
  io::Json losses = io::Json::array();
  for (auto k : c.losses) losses.push_back(preflosses::to_string(k));
  return {
      {"schema", kConfigSchema},
      {"seed", c.seed},
      {"world",
       {{"num_entities", c.world.num_entities},
        {"noise_rate", c.world.noise_rate},
        {"sentences_per_entity", c.world.sentences_per_entity},
        {"rejection_exemplar_rate", c.world.rejection_exemplar_rate},
        {"probe_exemplar_rate", c.world.probe_exemplar_rate},
        {"qa_per_entity", c.world.qa_per_entity},
        {"distractor_skew", c.world.distractor_skew}}},
      {"model",
       {{"embed_dim", c.model.embed_dim},
        {"num_layers", c.model.num_layers},
        {"num_heads", c.model.num_heads},
        {"context_len", c.model.context_len},
        {"mlp_dim", c.model.mlp_dim}}},
      {"pretrain",
       {{"epochs", c.pretrain.epochs},
        {"learning_rate", c.pretrain.learning_rate},
        {"final_lr_fraction", c.pretrain.final_lr_fraction},
        {"batch_size", c.pretrain.batch_size}}},
      {"queries",
       {{"id_bio", c.queries.id_bio},
        {"ood_open", c.queries.ood_open},
        {"ood_fp", c.queries.ood_fp},
        {"ood_kqa", c.queries.ood_kqa}}},
      {"prefs",
       {{"preference_entities", c.prefs.preference_entities},
        {"responses_per_prompt", c.prefs.responses_per_prompt},
        {"temperature", c.prefs.temperature},
        {"max_len", c.prefs.max_len}}},
      {"detection",
       {{"k", c.detection.k},
        {"temperature", c.detection.temperature},
        {"constrained", c.detection.constrained},
        {"max_answer_len", c.detection.max_answer_len}}},
      {"losses", losses},
      {"loss",
       {{"beta", c.loss.beta},
        {"tau", c.loss.tau},
        {"gamma", c.loss.gamma},
        {"lambda_d", c.loss.lambda_d},
        {"lambda_u", c.loss.lambda_u},
        {"length_normalized", c.loss.length_normalized}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"grad_accum", c.train.grad_accum},
        {"optimizer", tinylm::to_string(c.train.optimizer)}}},
      {"arms",
       {{"general", c.arms.general}, {"random_qa", c.arms.random_qa}, {"atomic", c.arms.atomic}}},
      {"eval", {{"max_len", c.eval.max_len}}},
      {"shift",
       {{"loss", preflosses::to_string(c.shift.loss)},
        {"basis", c.shift.basis == tokenshift::ShiftBasis::Signed ? "signed" : "absolute"},
        {"max_len", c.shift.max_len}}},
      {"sweeps", {{"quantity_fractions", c.sweeps.quantity_fractions}}},
  };
}

ExperimentConfig config_from_json(const io::Json& j) {
  auto c = ExperimentConfig::defaults();
  Section root(&j, "");
  std::string schema;
  root.get("schema", schema);
  if (schema != kConfigSchema)
    fail(ErrorKind::Config, "config schema must be '" + std::string(kConfigSchema) + "', got '" +
                                schema + "'");
  root.get("seed", c.seed);

  auto w = root.child("world");
  w.get("num_entities", c.world.num_entities);
  w.get("noise_rate", c.world.noise_rate);
  w.get("sentences_per_entity", c.world.sentences_per_entity);
  w.get("rejection_exemplar_rate", c.world.rejection_exemplar_rate);
  w.get("probe_exemplar_rate", c.world.probe_exemplar_rate);
  w.get("qa_per_entity", c.world.qa_per_entity);
  w.get("distractor_skew", c.world.distractor_skew);
  w.finish();

  auto m = root.child("model");
  m.get("embed_dim", c.model.embed_dim);
  m.get("num_layers", c.model.num_layers);
  m.get("num_heads", c.model.num_heads);
  m.get("context_len", c.model.context_len);
  m.get("mlp_dim", c.model.mlp_dim);
  m.finish();

  auto p = root.child("pretrain");
  p.get("epochs", c.pretrain.epochs);
  p.get("learning_rate", c.pretrain.learning_rate);
  p.get("final_lr_fraction", c.pretrain.final_lr_fraction);
  p.get("batch_size", c.pretrain.batch_size);
  p.finish();

  auto q = root.child("queries");
  q.get("id_bio", c.queries.id_bio);
  q.get("ood_open", c.queries.ood_open);
  q.get("ood_fp", c.queries.ood_fp);
  q.get("ood_kqa", c.queries.ood_kqa);
  q.finish();

  auto pr = root.child("prefs");
  pr.get("preference_entities", c.prefs.preference_entities);
  pr.get("responses_per_prompt", c.prefs.responses_per_prompt);
  pr.get("temperature", c.prefs.temperature);
  pr.get("max_len", c.prefs.max_len);
  pr.finish();

  auto d = root.child("detection");
  d.get("k", c.detection.k);
  d.get("temperature", c.detection.temperature);
  d.get("constrained", c.detection.constrained);
  d.get("max_answer_len", c.detection.max_answer_len);
  d.finish();

  if (const auto* ls = root.take("losses")) {
    if (!ls->is_array()) fail(ErrorKind::Config, "'losses' must be an array of loss names");
    c.losses.clear();
    for (const auto& name : *ls) {
      if (!name.is_string()) fail(ErrorKind::Config, "'losses' must be an array of loss names");
      try {
        c.losses.push_back(preflosses::parse_loss(name.get<std::string>()));
      } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("'losses': ") + e.what());
      }
    }
  }

  auto l = root.child("loss");
  l.get("beta", c.loss.beta);
  l.get("tau", c.loss.tau);
  l.get("gamma", c.loss.gamma);
  l.get("lambda_d", c.loss.lambda_d);
  l.get("lambda_u", c.loss.lambda_u);
  l.get("length_normalized", c.loss.length_normalized);
  l.finish();

  auto t = root.child("train");
  t.get("epochs", c.train.epochs);
  t.get("learning_rate", c.train.learning_rate);
  t.get("batch_size", c.train.batch_size);
  t.get("grad_accum", c.train.grad_accum);
  t.parsed("optimizer", c.train.optimizer, tinylm::parse_optimizer);
  t.finish();

  auto a = root.child("arms");
  a.get("general", c.arms.general);
  a.get("random_qa", c.arms.random_qa);
  a.get("atomic", c.arms.atomic);
  a.finish();

  auto e = root.child("eval");
  e.get("max_len", c.eval.max_len);
  e.finish();

  auto s = root.child("shift");
  s.parsed("loss", c.shift.loss, preflosses::parse_loss);
  s.parsed("basis", c.shift.basis, parse_basis);
  s.get("max_len", c.shift.max_len);
  s.finish();

  auto sw = root.child("sweeps");
  sw.get("quantity_fractions", c.sweeps.quantity_fractions);
  sw.finish();

  root.finish();
  try {
    c.validate();
  } catch (const Error& err) {
    fail(ErrorKind::Config, err.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  io::Json j;
  try {
    j = io::Json::parse(io::read_file(path));
  } catch (const io::Json::parse_error& e) {
    fail(ErrorKind::Config, "cannot parse config " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return config_from_json(j);
}

}  // namespace faktlab::harness

#include "pnpmri_cli/config.hpp"

#include <pnpmri/error.hpp>
#include <pnpmri/pnp_admm.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pnpmri::cli {

std::string to_string(Method m) {
  switch (m) {
  case Method::ZeroFilled:
    return "zero-filled";
  case Method::Grappa:
    return "grappa";
  case Method::Pnp:
    return "pnp";
  }
  return "?";
}

Method method_from_string(const std::string &name) {
  if (name == "zero-filled") return Method::ZeroFilled;
  if (name == "grappa") return Method::Grappa;
  if (name == "pnp") return Method::Pnp;
  throw ConfigError("unknown method '" + name + "' (expected zero-filled, grappa or pnp)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over a Weyl step
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ExperimentConfig::ExperimentConfig() {
  phantom.jitter = 0.1;
  train.adam.epochs = 12;
  train.adam.batch_size = 4;
  train.adam.patch_size = 32;
  train.adam.patches_per_pair = 4;
}

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
public:
  Reader(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string &where, const std::string &what) {
    throw ConfigError(where + ": " + what);
  }

  std::string where(const std::string &key) const { return path_ + "/" + key; }

  const Json *find(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string &key, double &out) {
    if (const Json *v = find(key)) {
      if (!v->is_number()) fail(where(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <typename U> void integer(const std::string &key, U &out) {
    if (const Json *v = find(key)) {
      if (!v->is_number_unsigned()) fail(where(key), "expected a nonnegative integer");
      out = static_cast<U>(v->get<std::uint64_t>());
    }
  }

  void boolean(const std::string &key, bool &out) {
    if (const Json *v = find(key)) {
      if (!v->is_boolean()) fail(where(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string &key, std::string &out) {
    if (const Json *v = find(key)) {
      if (!v->is_string()) fail(where(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto &[k, v] : j_.items()) {
      if (!seen_.count(k)) fail(where(k), "unknown key");
    }
  }

private:
  const Json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F> void with_section(Reader &r, const std::string &key, F &&f) {
  if (const Json *v = r.find(key)) {
    Reader sub(*v, r.where(key));
    f(sub);
    sub.finish();
  }
}

MaskSpec read_mask(Reader &r, MaskSpec m) {
  std::string pattern = to_string(m.pattern);
  r.string("pattern", pattern);
  try {
    m.pattern = pattern_kind_from_string(pattern);
  } catch (const Error &e) {
    Reader::fail(r.where("pattern"), e.what());
  }
  r.integer("accel_rows", m.accel_rows);
  r.integer("accel_cols", m.accel_cols);
  r.integer("acs", m.acs);
  return m;
}

Json mask_spec_json(const MaskSpec &m) {
  Json j;
  j["pattern"] = to_string(m.pattern);
  j["accel_rows"] = m.accel_rows;
  j["accel_cols"] = m.accel_cols;
  j["acs"] = m.acs;
  return j;
}

void read_config(const Json &root, ExperimentConfig &c) {
  Reader r(root, "");
  r.integer("seed", c.seed);
  r.string("out_dir", c.out_dir);
  r.integer("coils", c.coils);
  r.number("noise_sigma", c.noise_sigma);
  std::string method = to_string(c.method);
  r.string("method", method);
  try {
    c.method = method_from_string(method);
  } catch (const ConfigError &e) {
    Reader::fail("/method", e.what());
  }
  std::string maps = c.maps == MapsSource::Estimated ? "estimated" : "simulated";
  r.string("maps", maps);
  if (maps == "estimated") {
    c.maps = MapsSource::Estimated;
  } else if (maps == "simulated") {
    c.maps = MapsSource::Simulated;
  } else {
    Reader::fail("/maps", "expected \"estimated\" or \"simulated\"");
  }

  with_section(r, "phantom", [&](Reader &s) {
    std::string kind = to_string(c.phantom.kind);
    s.string("kind", kind);
    try {
      c.phantom.kind = phantom_kind_from_string(kind);
    } catch (const Error &e) {
      Reader::fail(s.where("kind"), e.what());
    }
    s.integer("rows", c.phantom.rows);
    s.integer("cols", c.phantom.cols);
    s.integer("num_ellipses", c.phantom.num_ellipses);
    s.number("jitter", c.phantom.jitter);
  });
  with_section(r, "mask", [&](Reader &s) { c.mask = read_mask(s, c.mask); });
  with_section(r, "pnp", [&](Reader &s) {
    s.number("lambda", c.pnp.lambda);
    s.integer("iterations", c.pnp.iterations);
    s.number("cg_tol", c.pnp.cg.tol);
    s.integer("cg_max_iters", c.pnp.cg.max_iters);
    s.string("checkpoint", c.pnp.checkpoint);
  });
  with_section(r, "grappa", [&](Reader &s) {
    s.integer("source_lines", c.grappa.num_source_lines);
    s.integer("readout_width", c.grappa.kernel_readout_width);
    s.number("tikhonov", c.grappa.tikhonov);
  });
  with_section(r, "train", [&](Reader &s) {
    auto &t = c.train;
    s.integer("pairs", t.pairs);
    s.integer("phantom_seed", t.phantom_seed);
    if (const Json *v = s.find("noise_sigmas")) {
      if (!v->is_array()) Reader::fail(s.where("noise_sigmas"), "expected an array of numbers");
      t.noise_sigmas.clear();
      for (const auto &x : *v) {
        if (!x.is_number()) Reader::fail(s.where("noise_sigmas"), "expected an array of numbers");
        t.noise_sigmas.push_back(x.get<double>());
      }
    }
    s.integer("aliased_every", t.aliased_every);
    s.integer("levels", t.arch.num_levels);
    s.integer("base_filters", t.arch.base_filters);
    s.integer("convs_per_level", t.arch.convs_per_level);
    s.boolean("residual", t.arch.residual);
    s.integer("epochs", t.adam.epochs);
    s.integer("batch_size", t.adam.batch_size);
    s.number("learning_rate", t.adam.learning_rate);
    s.integer("patch_size", t.adam.patch_size);
    s.integer("patches_per_pair", t.adam.patches_per_pair);
  });
  with_section(r, "compare", [&](Reader &s) {
    auto &cmp = c.compare;
    if (const Json *v = s.find("methods")) {
      if (!v->is_array()) Reader::fail(s.where("methods"), "expected an array of method names");
      cmp.methods.clear();
      for (const auto &x : *v) {
        if (!x.is_string()) Reader::fail(s.where("methods"), "expected an array of method names");
        try {
          cmp.methods.push_back(method_from_string(x.get<std::string>()));
        } catch (const ConfigError &e) {
          Reader::fail(s.where("methods"), e.what());
        }
      }
    }
    if (const Json *v = s.find("masks")) {
      if (!v->is_array()) Reader::fail(s.where("masks"), "expected an array of mask objects");
      cmp.masks.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        Reader m((*v)[i], s.where("masks") + "/" + std::to_string(i));
        cmp.masks.push_back(read_mask(m, MaskSpec{}));
        m.finish();
      }
    }
    s.integer("cases", cmp.cases);
    s.boolean("png", cmp.png);
  });
  with_section(r, "inputs", [&](Reader &s) {
    s.string("kspace", c.inputs.kspace);
    s.string("truth", c.inputs.truth);
    s.string("maps", c.inputs.maps);
  });
  r.finish();
}

// 1-based line and column of byte offset `pos`.
std::pair<std::size_t, std::size_t> line_column(const std::string &text, std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

template <typename F> void check(const std::string &where, F &&f) {
  try {
    f();
  } catch (const Error &e) {
    throw ConfigError(where + ": " + e.what());
  }
}

} // namespace

void ExperimentConfig::validate() const {
  check("/phantom", [&] { phantom.validate(); });
  if (coils < 1) throw ConfigError("/coils: must be at least 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("/noise_sigma: must be nonnegative");
  check("/mask", [&] { make_mask(phantom.rows, phantom.cols, mask); });
  for (std::size_t i = 0; i < compare.masks.size(); ++i) {
    check("/compare/masks/" + std::to_string(i), [&] { make_mask(phantom.rows, phantom.cols, compare.masks[i]); });
  }
  check("/pnp", [&] {
    PnpConfig p;
    p.lambda = pnp.lambda;
    p.num_iterations = pnp.iterations;
    p.cg = pnp.cg;
    p.validate();
  });
  check("/grappa", [&] {
    GrappaKernelGeometry g;
    g.num_source_lines = grappa.num_source_lines;
    g.kernel_readout_width = grappa.kernel_readout_width;
    g.validate();
  });
  if (!(grappa.tikhonov >= 0.0)) throw ConfigError("/grappa/tikhonov: must be nonnegative");
  check("/train", [&] {
    train.arch.validate();
    train.adam.validate();
  });
  if (train.pairs < 1) throw ConfigError("/train/pairs: must be at least 1");
  if (train.noise_sigmas.empty()) throw ConfigError("/train/noise_sigmas: must not be empty");
  for (double s : train.noise_sigmas) {
    if (!(s >= 0.0)) throw ConfigError("/train/noise_sigmas: entries must be nonnegative");
  }
  const std::size_t m = train.arch.size_multiple();
  if (phantom.rows % m != 0 || phantom.cols % m != 0) {
    throw ConfigError("/phantom: rows and cols must be multiples of " + std::to_string(m) + " for the denoiser");
  }
  if (train.adam.patch_size % m != 0 || train.adam.patch_size > std::min(phantom.rows, phantom.cols)) {
    throw ConfigError("/train/patch_size: must be a multiple of " + std::to_string(m) +
                      " no larger than the phantom");
  }
  if (compare.methods.empty()) throw ConfigError("/compare/methods: must not be empty");
  if (std::set<Method>(compare.methods.begin(), compare.methods.end()).size() != compare.methods.size()) {
    throw ConfigError("/compare/methods: duplicate method");
  }
  if (compare.cases < 1) throw ConfigError("/compare/cases: must be at least 1");
  if (out_dir.empty()) throw ConfigError("/out_dir: must not be empty");
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["phantom"] = {{"kind", to_string(phantom.kind)},
                  {"rows", phantom.rows},
                  {"cols", phantom.cols},
                  {"num_ellipses", phantom.num_ellipses},
                  {"jitter", phantom.jitter}};
  j["coils"] = coils;
  j["mask"] = mask_spec_json(mask);
  j["noise_sigma"] = noise_sigma;
  j["method"] = to_string(method);
  j["maps"] = maps == MapsSource::Estimated ? "estimated" : "simulated";
  j["pnp"] = {{"lambda", pnp.lambda},
              {"iterations", pnp.iterations},
              {"cg_tol", pnp.cg.tol},
              {"cg_max_iters", pnp.cg.max_iters},
              {"checkpoint", pnp.checkpoint}};
  j["grappa"] = {{"source_lines", grappa.num_source_lines},
                 {"readout_width", grappa.kernel_readout_width},
                 {"tikhonov", grappa.tikhonov}};
  j["train"] = {{"pairs", train.pairs},
                {"phantom_seed", train.phantom_seed},
                {"noise_sigmas", train.noise_sigmas},
                {"aliased_every", train.aliased_every},
                {"levels", train.arch.num_levels},
                {"base_filters", train.arch.base_filters},
                {"convs_per_level", train.arch.convs_per_level},
                {"residual", train.arch.residual},
                {"epochs", train.adam.epochs},
                {"batch_size", train.adam.batch_size},
                {"learning_rate", train.adam.learning_rate},
                {"patch_size", train.adam.patch_size},
                {"patches_per_pair", train.adam.patches_per_pair}};
  Json methods = Json::array();
  for (Method mt : compare.methods) methods.push_back(to_string(mt));
  Json masks = Json::array();
  for (const auto &ms : compare.masks) masks.push_back(mask_spec_json(ms));
  j["compare"] = {{"methods", methods}, {"masks", masks}, {"cases", compare.cases}, {"png", compare.png}};
  j["inputs"] = {{"kspace", inputs.kspace}, {"truth", inputs.truth}, {"maps", inputs.maps}};
  return j;
}

ExperimentConfig parse_config(const std::string &text, const std::string &source, const Overrides &o) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string msg = e.what();
    // nlohmann prefixes "[json.exception.parse_error.101] parse error at line L, column C: "
    if (const auto p = msg.find(": "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
  ExperimentConfig c;
  try {
    read_config(root, c);
  } catch (const ConfigError &e) {
    throw ConfigError(source + ": " + e.what());
  }
  apply_overrides(c, o);
  try {
    c.validate();
  } catch (const ConfigError &e) {
    throw ConfigError(source + " (with command-line overrides): " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string &path, const Overrides &o) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path, o);
}

void apply_overrides(ExperimentConfig &cfg, const Overrides &o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.method) cfg.method = method_from_string(*o.method);
  if (o.lambda) cfg.pnp.lambda = *o.lambda;
  if (o.iters) cfg.pnp.iterations = *o.iters;
}

} // namespace pnpmri::cli

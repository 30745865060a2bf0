#include "dsgan/cli/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "dsgan/core/error.hpp"

namespace dsgan {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const std::string& expected) {
  throw ValidationError("invalid value for '" + key + "': '" + text + "' (expected " + expected + ")");
}

template <typename T>
T number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(key, text, std::is_integral_v<T> ? "an unsigned integer" : "a number");
  return v;
}

bool boolean(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad_value(key, text, "true or false");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
std::vector<T> number_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(number<T>(key, item));
  if (out.empty()) bad_value(key, text, "a comma-separated list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, double>)
      s += format_double(v[i]);
    else if constexpr (std::is_same_v<T, bool>)
      s += v[i] ? "true" : "false";
    else
      s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> parse;
  std::function<std::string(const RunConfig&)> format;
};

template <typename T>
Field count_field(const char* key, T RunConfig::*member) {
  return {key, [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = number<T>(k, v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <typename T, typename Owner>
Field nested_count(const char* key, Owner RunConfig::*owner, T Owner::*member) {
  return {key,
          [owner, member](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*owner).*member = number<T>(k, v);
          },
          [owner, member](const RunConfig& c) { return std::to_string((c.*owner).*member); }};
}

template <typename Owner>
Field nested_real(const char* key, Owner RunConfig::*owner, double Owner::*member) {
  return {key,
          [owner, member](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*owner).*member = number<double>(k, v);
          },
          [owner, member](const RunConfig& c) { return format_double((c.*owner).*member); }};
}

template <typename T, typename Owner>
Field nested_list(const char* key, Owner RunConfig::*owner, std::vector<T> Owner::*member) {
  return {key,
          [owner, member](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*owner).*member = number_list<T>(k, v);
          },
          [owner, member](const RunConfig& c) { return join((c.*owner).*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using R = RunConfig;
    std::vector<Field> f{
        nested_real("learning_rate", &R::train, &TrainConfig::learning_rate),
        nested_real("beta1", &R::train, &TrainConfig::beta1),
        nested_real("beta2", &R::train, &TrainConfig::beta2),
        nested_real("l2_lambda", &R::train, &TrainConfig::l2_lambda),
        nested_count("batch_size", &R::train, &TrainConfig::batch_size),
        nested_count("epochs", &R::train, &TrainConfig::epochs),
        nested_count("minibatches_per_epoch", &R::train, &TrainConfig::minibatches_per_epoch),
        nested_count("d_steps_per_g_step", &R::train, &TrainConfig::d_steps_per_g_step),
        nested_count("seed", &R::train, &TrainConfig::seed),
        nested_count("checkpoint_every", &R::train, &TrainConfig::checkpoint_every),
        nested_count("sample_every", &R::train, &TrainConfig::sample_every),
        {"data_source", [](R& c, const std::string&, const std::string& v) { c.data_source = v; },
         [](const R& c) { return c.data_source; }},
        {"toy_kind",
         [](R& c, const std::string& k, const std::string& v) {
           if (v == "stripes") c.toy_kind = ToyKind::stripes;
           else if (v == "channels") c.toy_kind = ToyKind::channels;
           else bad_value(k, v, "stripes or channels");
         },
         [](const R& c) { return std::string(c.toy_kind == ToyKind::stripes ? "stripes" : "channels"); }},
        count_field("toy_height", &R::toy_height),
        count_field("toy_width", &R::toy_width),
        {"toy_band_width",
         [](R& c, const std::string& k, const std::string& v) { c.toy.band_width = number<int>(k, v); },
         [](const R& c) { return std::to_string(c.toy.band_width); }},
        {"toy_orientation",
         [](R& c, const std::string& k, const std::string& v) {
           if (v == "vertical") c.toy.orientation = Orientation::vertical;
           else if (v == "horizontal") c.toy.orientation = Orientation::horizontal;
           else bad_value(k, v, "vertical or horizontal");
         },
         [](const R& c) {
           return std::string(c.toy.orientation == Orientation::vertical ? "vertical" : "horizontal");
         }},
        nested_real("toy_channel_fraction", &R::toy, &ToyParams::channel_fraction),
        nested_real("toy_meander", &R::toy, &ToyParams::meander),
        count_field("toy_seed", &R::toy_seed),
        count_field("patch_size", &R::patch_size),
        count_field("noise_size", &R::noise_size),
        count_field("noise_channels", &R::noise_channels),
        nested_list("generator_deconv_filters", &R::generator, &GeneratorOptions::deconv_filters),
        nested_count("generator_deconv_kernel", &R::generator, &GeneratorOptions::deconv_kernel),
        nested_list("generator_dilated_filters", &R::generator, &GeneratorOptions::dilated_filters),
        nested_list("generator_dilations", &R::generator, &GeneratorOptions::dilations),
        nested_count("generator_dilated_kernel", &R::generator, &GeneratorOptions::dilated_kernel),
        {"generator_batch_norm",
         [](R& c, const std::string& k, const std::string& v) {
           if (v == "default") {
             c.generator_batch_norm.reset();
             return;
           }
           std::vector<bool> flags;
           for (const auto& item : split_list(v)) flags.push_back(boolean(k, item));
           c.generator_batch_norm = flags;
         },
         [](const R& c) { return c.generator_batch_norm ? join(*c.generator_batch_norm) : std::string("default"); }},
        nested_list("discriminator_filters", &R::discriminator, &DiscriminatorOptions::filters),
        nested_count("discriminator_kernel", &R::discriminator, &DiscriminatorOptions::kernel),
        nested_count("discriminator_stride", &R::discriminator, &DiscriminatorOptions::stride),
        nested_real("discriminator_leaky_alpha", &R::discriminator, &DiscriminatorOptions::leaky_alpha),
        {"discriminator_batch_norm",
         [](R& c, const std::string& k, const std::string& v) { c.discriminator.batch_norm = boolean(k, v); },
         [](const R& c) { return std::string(c.discriminator.batch_norm ? "true" : "false"); }},
        {"output_dir", [](R& c, const std::string&, const std::string& v) { c.output_dir = v; },
         [](const R& c) { return c.output_dir; }},
        nested_count("max_lag", &R::metrics, &MetricConfig::max_lag),
        nested_list("lbp_radii", &R::metrics, &MetricConfig::lbp_radii),
        nested_count("hog_cell", &R::metrics, &MetricConfig::hog_cell),
        nested_count("hog_bins", &R::metrics, &MetricConfig::hog_bins),
        {"connectivity",
         [](R& c, const std::string& k, const std::string& v) {
           if (v != "4" && v != "8") bad_value(k, v, "4 or 8");
           c.metrics.connectivity = parse_connectivity(v);
         },
         [](const R& c) { return to_string(c.metrics.connectivity); }},
        nested_real("threshold", &R::metrics, &MetricConfig::threshold),
        count_field("eval_count", &R::eval_count),
        count_field("eval_seed", &R::eval_seed),
    };
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

void RunConfig::apply(const KeyValueText& overrides) {
  for (const auto& [key, value] : overrides.entries()) {
    const Field* f = find_field(key);
    if (f == nullptr) throw ValidationError("unknown config key '" + key + "'");
    f->parse(*this, key, value);
  }
}

RunConfig RunConfig::from_text(const KeyValueText& kv) {
  RunConfig c;
  c.apply(kv);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  KeyValueText kv;
  try {
    kv = KeyValueText::parse(buf.str());
  } catch (const FormatError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_text(kv);
}

KeyValueText RunConfig::to_text() const {
  KeyValueText kv;
  for (const auto& f : fields()) kv.set(f.key, f.format(*this));
  return kv;
}

NetworkSpec RunConfig::generator_spec() const {
  NetworkSpec spec = make_generator_spec(noise_channels, 1, generator);
  if (generator_batch_norm) {
    if (generator_batch_norm->size() != spec.layers.size())
      throw ValidationError("generator_batch_norm lists " + std::to_string(generator_batch_norm->size()) +
                            " flags for " + std::to_string(spec.layers.size()) + " generator layers");
    for (std::size_t i = 0; i < spec.layers.size(); ++i) spec.layers[i].batch_norm = (*generator_batch_norm)[i];
  }
  return spec;
}

NetworkSpec RunConfig::discriminator_spec() const { return make_discriminator_spec(1, discriminator); }

void RunConfig::validate() const {
  train.validate();
  metrics.validate();
  if (noise_channels < 1) throw ValidationError("noise_channels must be >= 1");
  if (noise_size < 1) throw ValidationError("noise_size must be >= 1");
  if (eval_count < 1) throw ValidationError("eval_count must be >= 1");
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
  const NetworkSpec g = generator_spec();
  const NetworkSpec d = discriminator_spec();
  if (patch_size != noise_size * g.upscale())
    throw ValidationError("patch_size " + std::to_string(patch_size) + " must equal noise_size x generator upscale (" +
                          std::to_string(noise_size) + " x " + std::to_string(g.upscale()) + ")");
  if (patch_size % d.downscale() != 0)
    throw ValidationError("patch_size " + std::to_string(patch_size) + " is not divisible by the discriminator stride product " +
                          std::to_string(d.downscale()));
  if (metrics.max_lag >= patch_size)
    throw ValidationError("max_lag must be smaller than patch_size");
  if (data_source.empty()) {
    if (toy_height < 16 || toy_width < 16) throw ValidationError("toy_height and toy_width must be >= 16");
    if (toy.band_width < 1) throw ValidationError("toy_band_width must be >= 1");
    if (!(toy.channel_fraction > 0.0 && toy.channel_fraction <= 1.0))
      throw ValidationError("toy_channel_fraction must lie in (0, 1]");
    if (!(toy.meander >= 0.0)) throw ValidationError("toy_meander must be >= 0");
    if (patch_size > toy_height || patch_size > toy_width)
      throw ValidationError("patch_size exceeds the toy texture size");
  } else if (!std::filesystem::is_regular_file(data_source)) {
    throw ValidationError("data_source '" + data_source + "' does not exist");
  }
}

std::filesystem::path RunConfig::resolved_output_dir() const {
  std::filesystem::path dir(output_dir);
  if (const char* root = std::getenv("DSGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0' && dir.is_relative())
    return std::filesystem::path(root) / dir;
  return dir;
}

SourceImage RunConfig::load_training_image() const {
  if (!data_source.empty()) return load_source(data_source);
  return make_toy_texture(toy_kind, toy_height, toy_width, toy, toy_seed);
}

}  // namespace dsgan

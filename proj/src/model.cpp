#include "platenet/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "platenet/rng.hpp"

namespace platenet {

namespace {

constexpr char kMagic[8] = {'P', 'N', 'W', 'M', 'O', 'D', 'E', 'L'};
constexpr uint32_t kFormatVersion = 1;

enum LayerKind : uint8_t {
  kKindConv2D = 1,
  kKindMaxPool2D = 2,
  kKindFlatten = 3,
  kKindDense = 4,
  kKindDropout = 5,
};

uint64_t fnv1a64(const uint8_t* data, size_t len) {
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void append_u8(std::vector<uint8_t>& buf, uint8_t v) { buf.push_back(v); }

void append_u32(std::vector<uint8_t>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<uint8_t>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_f32(std::vector<uint8_t>& buf, float v) {
  append_u32(buf, std::bit_cast<uint32_t>(v));
}

// Bounds-checked little-endian reader over the loaded file image.
struct Cursor {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;

  void require(size_t n) const {
    if (pos + n > size) throw FormatError("truncated weight file", pos);
  }
  uint8_t u8() {
    require(1);
    return data[pos++];
  }
  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

std::string layer_base_name(const std::string& type) {
  if (type == "Conv2D") return "conv2d";
  if (type == "MaxPooling2D") return "max_pooling2d";
  if (type == "Flatten") return "flatten";
  if (type == "Dense") return "dense";
  if (type == "Dropout") return "dropout";
  return type;
}

std::string format_with_commas(size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  const size_t len = digits.size();
  for (size_t i = 0; i < len; ++i) {
    if (i > 0 && (len - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string shape_with_batch(const Shape& shape) {
  std::string s = "(None";
  for (int d : shape.dims()) s += ", " + std::to_string(d);
  return s + ")";
}

}  // namespace

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::kNone:
      return "none";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

ModelSpec ModelSpec::standard(int image_size, int channels) {
  ModelSpec spec;
  spec.height = image_size;
  spec.width = image_size;
  spec.channels = channels;
  spec.layers = {
      Conv2DConfig{32, 3, 2, Activation::kRelu},
      MaxPool2DConfig{2, 2},
      Conv2DConfig{16, 3, 2, Activation::kRelu},
      MaxPool2DConfig{2, 2},
      FlattenConfig{},
      DenseConfig{128, Activation::kRelu},
      DropoutConfig{0.2f},
      DenseConfig{64, Activation::kRelu},
      DropoutConfig{0.2f},
      DenseConfig{1, Activation::kSigmoid},
  };
  return spec;
}

Model Model::build(const ModelSpec& spec, uint64_t seed) {
  Model model;
  model.spec_ = spec;
  Rng weight_rng(seed);
  Shape current{spec.height, spec.width, spec.channels};
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    std::unique_ptr<Layer> layer;
    const LayerConfig& cfg = spec.layers[i];
    if (const auto* conv = std::get_if<Conv2DConfig>(&cfg)) {
      if (current.rank() != 3) {
        throw BuildError("layer " + std::to_string(i) + ": Conv2D needs (H,W,C) input, got " +
                         current.to_string());
      }
      auto l = std::make_unique<Conv2DLayer>(current[2], conv->filters, conv->kernel_size,
                                             conv->stride, conv->activation);
      l->init_weights(weight_rng);
      layer = std::move(l);
    } else if (const auto* pool = std::get_if<MaxPool2DConfig>(&cfg)) {
      layer = std::make_unique<MaxPool2DLayer>(pool->pool_size, pool->stride);
    } else if (std::get_if<FlattenConfig>(&cfg)) {
      layer = std::make_unique<FlattenLayer>();
    } else if (const auto* dense = std::get_if<DenseConfig>(&cfg)) {
      if (current.rank() != 1) {
        throw BuildError("layer " + std::to_string(i) + ": Dense needs flat input, got " +
                         current.to_string());
      }
      auto l = std::make_unique<DenseLayer>(current[0], dense->units, dense->activation);
      l->init_weights(weight_rng);
      layer = std::move(l);
    } else if (const auto* drop = std::get_if<DropoutConfig>(&cfg)) {
      layer = std::make_unique<DropoutLayer>(drop->rate, mix_seed(seed, 0x1000 + i));
    } else {
      throw BuildError("unknown layer config at index " + std::to_string(i));
    }
    try {
      current = layer->output_shape(current);
    } catch (const BuildError& e) {
      throw BuildError("layer " + std::to_string(i) + " (" + layer->type_name() +
                       "): " + e.what());
    }
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

Tensor Model::forward(const Tensor& batch, Mode mode) {
  const Shape& s = batch.shape();
  if (s.rank() != 4 || s[1] != spec_.height || s[2] != spec_.width || s[3] != spec_.channels) {
    throw ShapeError("model expects (N," + std::to_string(spec_.height) + "," +
                     std::to_string(spec_.width) + "," + std::to_string(spec_.channels) +
                     ") input, got " + s.to_string());
  }
  if (mode == Mode::kTraining) {
    inputs_.clear();
    inputs_.reserve(layers_.size());
    Tensor x = batch;
    for (auto& layer : layers_) {
      inputs_.push_back(std::move(x));
      x = layer->forward(inputs_.back(), mode);
    }
    has_forward_state_ = true;
    return x;
  }
  Tensor x = batch;
  for (auto& layer : layers_) x = layer->forward(x, mode);
  return x;
}

Tensor Model::backward(const Tensor& grad_out) {
  if (!has_forward_state_) {
    throw StateError("model backward before training-mode forward");
  }
  Tensor grad = grad_out;
  for (size_t i = layers_.size(); i-- > 0;) {
    grad = layers_[i]->backward(inputs_[i], grad);
  }
  return grad;
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> params;
  for (auto& layer : layers_) {
    for (ParamRef p : layer->parameters()) params.push_back(p);
  }
  return params;
}

Summary Model::summary() const {
  Summary summary;
  Shape current{spec_.height, spec_.width, spec_.channels};
  std::vector<std::pair<std::string, int>> counters;
  for (const auto& layer : layers_) {
    current = layer->output_shape(current);
    const std::string base = layer_base_name(layer->type_name());
    int count = 0;
    bool found = false;
    for (auto& [name, n] : counters) {
      if (name == base) {
        count = ++n;
        found = true;
        break;
      }
    }
    if (!found) counters.emplace_back(base, 0);
    std::string display = count == 0 ? base : base + "_" + std::to_string(count);
    summary.rows.push_back(
        {display + " (" + layer->type_name() + ")", current, layer->param_count()});
    summary.total_params += layer->param_count();
  }
  summary.trainable_params = summary.total_params;
  summary.non_trainable_params = 0;
  return summary;
}

std::string Summary::to_string() const {
  std::ostringstream os;
  auto pad = [](const std::string& s, size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
  };
  os << pad("Layer (type)", 30) << pad("Output Shape", 26) << "Param #\n";
  os << std::string(65, '=') << "\n";
  for (const auto& row : rows) {
    os << pad(row.name, 30) << pad(shape_with_batch(row.output_shape), 26)
       << format_with_commas(row.param_count) << "\n";
  }
  os << std::string(65, '=') << "\n";
  os << "Total params: " << format_with_commas(total_params) << "\n";
  os << "Trainable params: " << format_with_commas(trainable_params) << "\n";
  os << "Non-trainable params: " << format_with_commas(non_trainable_params) << "\n";
  return os.str();
}

void Model::save(const std::filesystem::path& path) const {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 8);
  append_u32(buf, kFormatVersion);
  append_u32(buf, static_cast<uint32_t>(spec_.height));
  append_u32(buf, static_cast<uint32_t>(spec_.width));
  append_u32(buf, static_cast<uint32_t>(spec_.channels));
  append_u32(buf, static_cast<uint32_t>(spec_.layers.size()));
  for (const LayerConfig& cfg : spec_.layers) {
    std::vector<uint8_t> payload;
    if (const auto* conv = std::get_if<Conv2DConfig>(&cfg)) {
      append_u8(payload, kKindConv2D);
      append_u32(payload, static_cast<uint32_t>(conv->filters));
      append_u32(payload, static_cast<uint32_t>(conv->kernel_size));
      append_u32(payload, static_cast<uint32_t>(conv->stride));
      append_u8(payload, static_cast<uint8_t>(conv->activation));
    } else if (const auto* pool = std::get_if<MaxPool2DConfig>(&cfg)) {
      append_u8(payload, kKindMaxPool2D);
      append_u32(payload, static_cast<uint32_t>(pool->pool_size));
      append_u32(payload, static_cast<uint32_t>(pool->stride));
    } else if (std::get_if<FlattenConfig>(&cfg)) {
      append_u8(payload, kKindFlatten);
    } else if (const auto* dense = std::get_if<DenseConfig>(&cfg)) {
      append_u8(payload, kKindDense);
      append_u32(payload, static_cast<uint32_t>(dense->units));
      append_u8(payload, static_cast<uint8_t>(dense->activation));
    } else if (const auto* drop = std::get_if<DropoutConfig>(&cfg)) {
      append_u8(payload, kKindDropout);
      append_f32(payload, drop->rate);
    }
    append_u32(buf, static_cast<uint32_t>(payload.size()));
    buf.insert(buf.end(), payload.begin(), payload.end());
  }

  auto params = const_cast<Model*>(this)->parameters();
  append_u32(buf, static_cast<uint32_t>(params.size()));
  for (const ParamRef& p : params) {
    const Tensor& t = *p.value;
    append_u32(buf, static_cast<uint32_t>(t.shape().rank()));
    for (int d : t.shape().dims()) append_u32(buf, static_cast<uint32_t>(d));
    for (float v : t.values()) append_f32(buf, v);
  }
  append_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary | std::ios::ate);
  if (!file) throw IoError("cannot open " + path.string());
  const auto size = static_cast<size_t>(file.tellg());
  std::vector<uint8_t> buf(size);
  file.seekg(0);
  file.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!file) throw IoError("read failed for " + path.string());

  if (size < 8 || std::memcmp(buf.data(), kMagic, 8) != 0) {
    throw FormatError("bad magic in " + path.string(), 0);
  }
  Cursor cur{buf.data(), size, 8};
  const uint32_t version = cur.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version), 8);
  }
  if (size < cur.pos + 8) throw FormatError("truncated weight file", size);
  const uint64_t stored = [&] {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[size - 8 + i]) << (8 * i);
    return v;
  }();
  if (fnv1a64(buf.data(), size - 8) != stored) {
    throw FormatError("checksum mismatch", size - 8);
  }
  cur.size = size - 8;  // checksum is not part of the payload

  ModelSpec spec;
  spec.height = static_cast<int>(cur.u32());
  spec.width = static_cast<int>(cur.u32());
  spec.channels = static_cast<int>(cur.u32());
  const uint32_t layer_count = cur.u32();
  for (uint32_t i = 0; i < layer_count; ++i) {
    const uint32_t payload_len = cur.u32();
    const size_t payload_end = cur.pos + payload_len;
    cur.require(payload_len);
    const uint8_t kind = cur.u8();
    switch (kind) {
      case kKindConv2D: {
        Conv2DConfig c;
        c.filters = static_cast<int>(cur.u32());
        c.kernel_size = static_cast<int>(cur.u32());
        c.stride = static_cast<int>(cur.u32());
        c.activation = static_cast<Activation>(cur.u8());
        spec.layers.emplace_back(c);
        break;
      }
      case kKindMaxPool2D: {
        MaxPool2DConfig c;
        c.pool_size = static_cast<int>(cur.u32());
        c.stride = static_cast<int>(cur.u32());
        spec.layers.emplace_back(c);
        break;
      }
      case kKindFlatten:
        spec.layers.emplace_back(FlattenConfig{});
        break;
      case kKindDense: {
        DenseConfig c;
        c.units = static_cast<int>(cur.u32());
        c.activation = static_cast<Activation>(cur.u8());
        spec.layers.emplace_back(c);
        break;
      }
      case kKindDropout: {
        DropoutConfig c;
        c.rate = cur.f32();
        spec.layers.emplace_back(c);
        break;
      }
      default:
        throw FormatError("unknown layer kind " + std::to_string(kind), cur.pos - 1);
    }
    if (cur.pos != payload_end) {
      throw FormatError("layer record length mismatch", cur.pos);
    }
  }

  Model model;
  try {
    model = build(spec, 0);
  } catch (const BuildError& e) {
    throw StructureError(std::string("weight file describes an invalid model: ") + e.what());
  }
  auto params = model.parameters();
  const uint32_t tensor_count = cur.u32();
  if (tensor_count != params.size()) {
    throw StructureError("weight file has " + std::to_string(tensor_count) +
                         " tensors, model expects " + std::to_string(params.size()));
  }
  for (ParamRef& p : params) {
    const uint32_t rank = cur.u32();
    if (rank < 1 || rank > 4) throw FormatError("invalid tensor rank", cur.pos - 4);
    std::vector<int> dims(rank);
    for (uint32_t d = 0; d < rank; ++d) dims[d] = static_cast<int>(cur.u32());
    Shape shape(dims);
    if (shape != p.value->shape()) {
      throw StructureError("tensor shape " + shape.to_string() +
                           " does not match model parameter " + p.value->shape().to_string());
    }
    for (float& v : p.value->values()) v = cur.f32();
  }
  if (cur.pos != cur.size) {
    throw FormatError("trailing bytes after tensor data", cur.pos);
  }
  return model;
}

Model Model::clone() const {
  Model copy = build(spec_, 0);
  auto src = const_cast<Model*>(this)->parameters();
  auto dst = copy.parameters();
  for (size_t i = 0; i < src.size(); ++i) *dst[i].value = *src[i].value;
  return copy;
}

}  // namespace platenet

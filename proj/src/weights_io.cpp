#include "haec/weights_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <vector>

namespace haec {
namespace {

static_assert(std::endian::native == std::endian::little, "weights I/O assumes a little-endian host");

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TensorRef {
  std::string name;
  Eigen::MatrixXf* matrix = nullptr;
  Eigen::VectorXf* vector = nullptr;
  Index rows = 0, cols = 0;
};

std::vector<TensorRef> tensor_list(ModelWeights& w) {
  std::vector<TensorRef> out;
  for (size_t i = 0; i < w.arch.layers.size(); ++i) {
    const LayerSpec& s = w.arch.layers[i];
    LayerWeights& lw = w.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    const Index rows = s.kind == LayerKind::Gru ? 3 * s.output : s.output;
    out.push_back({p + "kernel", &lw.kernel, nullptr, rows, s.input});
    if (s.kind == LayerKind::Gru) out.push_back({p + "recurrent", &lw.recurrent, nullptr, rows, s.output});
    out.push_back({p + "bias", nullptr, &lw.bias, rows, 1});
    if (s.kind == LayerKind::Gru) out.push_back({p + "recurrent_bias", nullptr, &lw.recurrent_bias, rows, 1});
  }
  return out;
}

LayerKind parse_kind(const std::string& s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "gru") return LayerKind::Gru;
  throw InputError("weights: unknown layer kind '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  throw InputError("weights: unknown activation '" + s + "'");
}

std::string next_line(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("weights: truncated header");
  return line;
}

template <typename T>
T expect_field(std::istream& is, const std::string& key) {
  std::istringstream ls(next_line(is));
  std::string k;
  T v{};
  if (!(ls >> k >> v) || k != key) throw InputError("weights: expected header field '" + key + "'");
  return v;
}

}  // namespace

std::string to_string(LayerKind kind) { return kind == LayerKind::Gru ? "gru" : "dense"; }

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "linear";
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  weights.validate();
  ModelWeights copy = weights;
  const auto tensors = tensor_list(copy);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << kWeightsMagic << '\n' << "version " << kWeightsVersion << '\n';
  os << "num_bands " << weights.arch.num_bands << '\n' << "num_bins " << weights.arch.num_bins << '\n';
  os << "gru_convention " << weights.arch.gru_convention << '\n';
  os << "layers " << weights.arch.layers.size() << '\n';
  for (const auto& s : weights.arch.layers)
    os << "layer " << to_string(s.kind) << ' ' << s.input << ' ' << s.output << ' ' << to_string(s.activation) << '\n';
  for (const auto& t : tensors) os << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
  os << "end\n";
  for (const auto& t : tensors) {
    if (t.matrix) {
      const RowMajorF rm = *t.matrix;
      os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(float)));
    } else {
      os.write(reinterpret_cast<const char*>(t.vector->data()),
               static_cast<std::streamsize>(t.vector->size() * sizeof(float)));
    }
  }
  if (!os) throw InputError("write failed: " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  if (next_line(is) != kWeightsMagic) throw InputError("weights: bad magic in " + path.string());
  const int version = expect_field<int>(is, "version");
  if (version != kWeightsVersion) throw InputError("weights: unsupported format version " + std::to_string(version));

  ModelArch arch;
  arch.num_bands = expect_field<Index>(is, "num_bands");
  arch.num_bins = expect_field<Index>(is, "num_bins");
  arch.gru_convention = expect_field<std::string>(is, "gru_convention");
  const Index num_layers = expect_field<Index>(is, "layers");
  if (num_layers < 1 || num_layers > 1024) throw InputError("weights: implausible layer count");
  for (Index i = 0; i < num_layers; ++i) {
    std::istringstream ls(next_line(is));
    std::string tag, kind, act;
    LayerSpec s;
    if (!(ls >> tag >> kind >> s.input >> s.output >> act) || tag != "layer") throw InputError("weights: bad layer line");
    s.kind = parse_kind(kind);
    s.activation = parse_activation(act);
    arch.layers.push_back(s);
  }
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw InputError(std::string("weights: invalid manifest: ") + e.what());
  }

  ModelWeights w = zero_weights(arch);
  auto tensors = tensor_list(w);
  for (const auto& t : tensors) {
    std::istringstream ls(next_line(is));
    std::string tag, name;
    Index rows = 0, cols = 0;
    if (!(ls >> tag >> name >> rows >> cols) || tag != "tensor") throw InputError("weights: bad tensor line");
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw InputError("weights: tensor '" + name + "' does not match manifest");
  }
  if (next_line(is) != "end") throw InputError("weights: missing end of header");

  for (auto& t : tensors) {
    const Index count = t.rows * t.cols;
    std::vector<float> buf(static_cast<size_t>(count));
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float))))
      throw InputError("weights: truncated tensor data");
    if (t.matrix)
      *t.matrix = Eigen::Map<const RowMajorF>(buf.data(), t.rows, t.cols);
    else
      *t.vector = Eigen::Map<const Eigen::VectorXf>(buf.data(), t.rows);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw InputError("weights: trailing bytes after tensors");
  w.validate();
  return w;
}

}  // namespace haec

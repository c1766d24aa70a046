#include "bacl/classifier.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bacl {
namespace {

constexpr std::string_view kCheckpointMagic = "bacl-checkpoint";
constexpr int kCheckpointVersion = 1;

Eigen::MatrixXd RandomMatrix(int rows, int cols, double scale, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.Uniform(-scale, scale);
  }
  return m;
}

std::span<double> Flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> Flat(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> Flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> Flat(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void WriteTensor(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  out << std::hexfloat;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << m(r, c);
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

std::string Token(std::istream& in) {
  std::string t;
  if (!(in >> t)) throw std::runtime_error("checkpoint: unexpected end of file");
  return t;
}

void ExpectToken(std::istream& in, std::string_view want) {
  const std::string got = Token(in);
  if (got != want) {
    throw std::runtime_error("checkpoint: expected '" + std::string(want) + "', got '" +
                             got + "'");
  }
}

Eigen::MatrixXd ReadTensor(std::istream& in, std::string_view name) {
  ExpectToken(in, "tensor");
  ExpectToken(in, name);
  const long rows = std::stol(Token(in));
  const long cols = std::stol(Token(in));
  if (rows < 0 || cols < 0) throw std::runtime_error("checkpoint: negative tensor shape");
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      const std::string t = Token(in);
      char* end = nullptr;
      m(r, c) = std::strtod(t.c_str(), &end);
      if (end == t.c_str() || *end != '\0') {
        throw std::runtime_error("checkpoint: bad real '" + t + "' in tensor " +
                                 std::string(name));
      }
    }
  }
  return m;
}

}  // namespace

FeatureExtractor FeatureExtractor::Random(int input_dim, int dim, int layers, Rng& rng) {
  if (layers != 1 && layers != 2)
    throw std::invalid_argument("feature extractor: layers must be 1 or 2");
  FeatureExtractor e;
  e.layers = layers;
  // Uniform(-a, a) with a = sqrt(3 / fan_in) keeps unit pre-activation variance.
  e.w1 = RandomMatrix(dim, input_dim, std::sqrt(3.0 / input_dim), rng);
  e.b1 = Eigen::VectorXd::Zero(dim);
  if (layers == 2) {
    e.w2 = RandomMatrix(dim, dim, std::sqrt(3.0 / dim), rng);
    e.b2 = Eigen::VectorXd::Zero(dim);
  }
  return e;
}

FeatureExtractor FeatureExtractor::Identity(int dim, int layers) {
  if (layers != 1 && layers != 2)
    throw std::invalid_argument("feature extractor: layers must be 1 or 2");
  FeatureExtractor e;
  e.layers = layers;
  e.w1 = Eigen::MatrixXd::Identity(dim, dim);
  e.b1 = Eigen::VectorXd::Zero(dim);
  if (layers == 2) {
    e.w2 = Eigen::MatrixXd::Identity(dim, dim);
    e.b2 = Eigen::VectorXd::Zero(dim);
  }
  return e;
}

Eigen::VectorXd FeatureExtractor::Extract(const Eigen::VectorXd& x) const {
  Cache cache;
  return Forward(x, cache);
}

Eigen::VectorXd FeatureExtractor::Forward(const Eigen::VectorXd& x, Cache& cache) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("feature extractor: input width " + std::to_string(x.size()) +
                                " != " + std::to_string(input_dim()));
  }
  cache.x = x;
  cache.h1 = (w1 * x + b1).array().tanh();
  cache.h = layers == 2 ? Eigen::VectorXd((w2 * cache.h1 + b2).array().tanh()) : cache.h1;
  return cache.h;
}

void FeatureExtractor::Backward(const Cache& cache, const Eigen::VectorXd& grad_h,
                                Grads& g) const {
  // d tanh(a) / da = 1 - tanh(a)^2
  Eigen::VectorXd delta1;
  if (layers == 2) {
    const Eigen::VectorXd delta2 = grad_h.array() * (1.0 - cache.h.array().square());
    g.w2.noalias() += delta2 * cache.h1.transpose();
    g.b2 += delta2;
    delta1 = (w2.transpose() * delta2).array() * (1.0 - cache.h1.array().square());
  } else {
    delta1 = grad_h.array() * (1.0 - cache.h1.array().square());
  }
  g.w1.noalias() += delta1 * cache.x.transpose();
  g.b1 += delta1;
}

FeatureExtractor::Grads FeatureExtractor::ZeroGrads() const {
  Grads g;
  g.w1 = Eigen::MatrixXd::Zero(w1.rows(), w1.cols());
  g.b1 = Eigen::VectorXd::Zero(b1.size());
  g.w2 = Eigen::MatrixXd::Zero(w2.rows(), w2.cols());
  g.b2 = Eigen::VectorXd::Zero(b2.size());
  return g;
}

ClassifierHead ClassifierHead::Random(int num_classes, int dim, double scale, Rng& rng) {
  ClassifierHead h;
  h.w = RandomMatrix(num_classes + 1, dim, scale, rng);
  h.b = Eigen::VectorXd::Zero(num_classes + 1);
  return h;
}

Eigen::VectorXd ClassifierHead::Forward(const Eigen::VectorXd& h) const {
  if (h.size() != dim()) {
    throw std::invalid_argument("classifier head: feature width " + std::to_string(h.size()) +
                                " != " + std::to_string(dim()));
  }
  return w * h + b;
}

Eigen::VectorXd ClassifierHead::Backward(const Eigen::VectorXd& h,
                                         const Eigen::VectorXd& grad_z, Grads& g) const {
  g.w.noalias() += grad_z * h.transpose();
  g.b += grad_z;
  return w.transpose() * grad_z;
}

ClassifierHead::Grads ClassifierHead::ZeroGrads() const {
  return Grads{Eigen::MatrixXd::Zero(w.rows(), w.cols()), Eigen::VectorXd::Zero(b.size())};
}

Eigen::VectorXd WeightNorms(const ClassifierHead& head) {
  return head.w.topRows(head.num_classes()).rowwise().norm();
}

void SgdStep(std::span<const ParamSlot> slots, OptimizerState& state, double momentum,
             double weight_decay) {
  for (const auto& s : slots) {
    if (s.value.size() != s.grad.size()) {
      throw std::invalid_argument("sgd: gradient shape mismatch for " + s.name);
    }
    if (s.frozen) continue;
    for (double g : s.grad) {
      if (!std::isfinite(g)) throw std::invalid_argument("sgd: non-finite gradient in " + s.name);
    }
  }
  if (state.velocity.empty()) {
    for (const auto& s : slots) state.velocity.emplace_back(s.value.size(), 0.0);
  }
  if (state.velocity.size() != slots.size()) {
    throw std::invalid_argument("sgd: parameter list differs from optimizer buffers");
  }
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& s = slots[k];
    auto& v = state.velocity[k];
    if (v.size() != s.value.size()) {
      throw std::invalid_argument("sgd: buffer shape mismatch for " + s.name);
    }
    if (s.frozen) continue;
    for (std::size_t n = 0; n < v.size(); ++n) {
      v[n] = momentum * v[n] + (s.grad[n] + weight_decay * s.value[n]);
      s.value[n] -= state.lr * v[n];
    }
  }
  ++state.step;
}

std::vector<ParamSlot> HeadSlots(ClassifierHead& head, const ClassifierHead::Grads& g) {
  return {
      ParamSlot{"head.w", Flat(head.w), Flat(g.w), false},
      ParamSlot{"head.b", Flat(head.b), Flat(g.b), false},
  };
}

std::vector<ParamSlot> ExtractorSlots(FeatureExtractor& ext,
                                      const FeatureExtractor::Grads& g) {
  std::vector<ParamSlot> slots = {
      ParamSlot{"extractor.w1", Flat(ext.w1), Flat(g.w1), ext.frozen},
      ParamSlot{"extractor.b1", Flat(ext.b1), Flat(g.b1), ext.frozen},
  };
  if (ext.layers == 2) {
    slots.push_back(ParamSlot{"extractor.w2", Flat(ext.w2), Flat(g.w2), ext.frozen});
    slots.push_back(ParamSlot{"extractor.b2", Flat(ext.b2), Flat(g.b2), ext.frozen});
  }
  return slots;
}

void SaveCheckpoint(const Model& model, std::ostream& out) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "output " << (model.output == OutputKind::kSigmoid ? "sigmoid" : "softmax") << '\n';
  const auto& e = model.extractor;
  out << "extractor " << e.layers << ' ' << (e.frozen ? 1 : 0) << '\n';
  WriteTensor(out, "w1", e.w1);
  WriteTensor(out, "b1", e.b1);
  if (e.layers == 2) {
    WriteTensor(out, "w2", e.w2);
    WriteTensor(out, "b2", e.b2);
  }
  out << "head\n";
  WriteTensor(out, "w", model.head.w);
  WriteTensor(out, "b", model.head.b);
  out << "end\n";
}

Model LoadCheckpoint(std::istream& in) {
  ExpectToken(in, kCheckpointMagic);
  const int version = std::stoi(Token(in));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Model m;
  ExpectToken(in, "output");
  const std::string output = Token(in);
  if (output == "sigmoid") {
    m.output = OutputKind::kSigmoid;
  } else if (output == "softmax") {
    m.output = OutputKind::kSoftmax;
  } else {
    throw std::runtime_error("checkpoint: unknown output kind '" + output + "'");
  }
  ExpectToken(in, "extractor");
  auto& e = m.extractor;
  e.layers = std::stoi(Token(in));
  e.frozen = Token(in) == "1";
  if (e.layers != 1 && e.layers != 2) throw std::runtime_error("checkpoint: bad layer count");
  e.w1 = ReadTensor(in, "w1");
  e.b1 = ReadTensor(in, "b1");
  if (e.layers == 2) {
    e.w2 = ReadTensor(in, "w2");
    e.b2 = ReadTensor(in, "b2");
  }
  ExpectToken(in, "head");
  m.head.w = ReadTensor(in, "w");
  m.head.b = ReadTensor(in, "b");
  ExpectToken(in, "end");
  if (m.head.b.size() != m.head.w.rows() || m.head.w.cols() != e.dim()) {
    throw std::runtime_error("checkpoint: head shape does not match extractor");
  }
  return m;
}

void SaveCheckpointFile(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  SaveCheckpoint(model, out);
}

Model LoadCheckpointFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return LoadCheckpoint(in);
}

}  // namespace bacl

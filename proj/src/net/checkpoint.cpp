#include "bsf/net/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <ios>
#include <sstream>

#include "bsf/core/error.hpp"

namespace bsf::net {
namespace {

void write_reals(std::ostream& os, const char* tag, std::span<const double> values) {
  os << tag;
  for (double v : values) os << ' ' << std::hexfloat << v;
  os << std::defaultfloat << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw InputError("checkpoint truncated");
    return w;
  }
  void expect(const std::string& tag) {
    const std::string w = word();
    if (w != tag) throw InputError("checkpoint: expected '" + tag + "', found '" + w + "'");
  }
  std::size_t count() {
    const std::string w = word();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(w.c_str(), &end, 10);
    if (w.empty() || *end != '\0' || w[0] == '-') throw InputError("checkpoint: bad integer '" + w + "'");
    return static_cast<std::size_t>(v);
  }
  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (w.empty() || *end != '\0') throw InputError("checkpoint: bad number '" + w + "'");
    return v;
  }
  void reals(const char* tag, std::span<double> out) {
    expect(tag);
    for (double& v : out) v = real();
  }

 private:
  std::istream& is_;
};

}  // namespace

void save_checkpoint(const Network& net, std::ostream& os) {
  os << "bsfnet " << kCheckpointVersion << '\n';
  os << "input " << net.input_shape().size();
  for (std::size_t e : net.input_shape()) os << ' ' << e;
  os << "\nlayers " << net.size() << '\n';
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
      os << "dense " << d->in << ' ' << d->out << '\n';
      write_reals(os, "weight", d->weight.data());
      write_reals(os, "bias", d->bias.data());
    } else if (std::holds_alternative<Relu>(layer)) {
      os << "relu\n";
    } else if (const auto* c = std::get_if<Conv1d>(&layer)) {
      os << "conv1d " << c->in_channels << ' ' << c->out_channels << ' ' << c->kernel << ' ' << c->stride << '\n';
      write_reals(os, "weight", c->weight.data());
      write_reals(os, "bias", c->bias.data());
    } else if (std::holds_alternative<Flatten>(layer)) {
      os << "flatten\n";
    } else {
      const auto& b = std::get<Gate>(layer).bsf;
      os << "bsf " << b.n_gates() << ' ' << b.positions() << ' ' << std::hexfloat << b.tau << ' ' << b.lambda
         << std::defaultfloat << ' ' << (b.estimator == filter::GradientEstimator::scaled ? "scaled" : "plain") << ' '
         << (b.mask_mode == filter::MaskMode::per_batch ? "per_batch" : "per_sample") << ' ' << (b.trainable ? 1 : 0)
         << '\n';
      os << "groups";
      for (std::size_t g : b.groups.gate_of) os << ' ' << g;
      os << '\n';
      write_reals(os, "p", b.p);
    }
  }
  os << "end\n";
}

Network load_checkpoint(std::istream& is) {
  Reader in(is);
  in.expect("bsfnet");
  const std::size_t version = in.count();
  if (version != static_cast<std::size_t>(kCheckpointVersion))
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  in.expect("input");
  Shape input(in.count());
  for (auto& e : input) e = in.count();
  Network net(input);
  in.expect("layers");
  const std::size_t n = in.count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string kind = in.word();
    if (kind == "dense") {
      const std::size_t a = in.count(), b = in.count();
      Dense d(a, b);
      in.reals("weight", d.weight.data());
      in.reals("bias", d.bias.data());
      net.add(std::move(d));
    } else if (kind == "relu") {
      net.relu();
    } else if (kind == "conv1d") {
      const std::size_t ci = in.count(), co = in.count(), k = in.count(), s = in.count();
      Conv1d c(ci, co, k, s);
      in.reals("weight", c.weight.data());
      in.reals("bias", c.bias.data());
      net.add(std::move(c));
    } else if (kind == "flatten") {
      net.flatten();
    } else if (kind == "bsf") {
      filter::BsfLayer b;
      const std::size_t gates = in.count(), positions = in.count();
      b.tau = in.real();
      b.lambda = in.real();
      const std::string est = in.word(), mode = in.word();
      if (est != "scaled" && est != "plain") throw InputError("checkpoint: unknown estimator '" + est + "'");
      if (mode != "per_batch" && mode != "per_sample") throw InputError("checkpoint: unknown mask mode '" + mode + "'");
      b.estimator = est == "scaled" ? filter::GradientEstimator::scaled : filter::GradientEstimator::plain;
      b.mask_mode = mode == "per_batch" ? filter::MaskMode::per_batch : filter::MaskMode::per_sample;
      b.trainable = in.count() != 0;
      in.expect("groups");
      b.groups.n_gates = gates;
      b.groups.gate_of.resize(positions);
      for (auto& g : b.groups.gate_of) g = in.count();
      b.p.resize(gates);
      in.reals("p", b.p);
      net.add(Gate(std::move(b)));
    } else {
      throw InputError("checkpoint: unknown layer kind '" + kind + "'");
    }
  }
  in.expect("end");
  net.set_mode(Mode::infer);
  return net;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write checkpoint " + path.string());
  save_checkpoint(net, os);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open checkpoint " + path.string());
  return load_checkpoint(is);
}

std::string to_checkpoint_string(const Network& net) {
  std::ostringstream os;
  save_checkpoint(net, os);
  return os.str();
}

Network from_checkpoint_string(const std::string& text) {
  std::istringstream is(text);
  return load_checkpoint(is);
}

}  // namespace bsf::net

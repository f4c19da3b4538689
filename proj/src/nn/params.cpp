#include "feddig/nn/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "feddig/error.hpp"
#include "feddig/util/binary_io.hpp"

namespace feddig::nn {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

void check_layout(const ParamSet& a, const ParamSet& b) {
  require(a.same_layout(b), ErrorCategory::kContract, "parameter sets have different layouts");
}

}  // namespace

ParamSet ParamSet::capture(const std::vector<const Parameter*>& params) {
  ParamSet out;
  out.tensors.reserve(params.size());
  for (const Parameter* p : params) out.tensors.push_back({p->name, p->value});
  return out;
}

void ParamSet::assign_to(const std::vector<Parameter*>& params) const {
  require(params.size() == tensors.size(), ErrorCategory::kContract, "parameter count mismatch on load");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->name == tensors[i].name && params[i]->value.shape() == tensors[i].value.shape(),
            ErrorCategory::kContract, "parameter " + tensors[i].name + " does not match " + params[i]->name);
    params[i]->value = tensors[i].value;
  }
}

std::size_t ParamSet::element_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.value.size();
  return n;
}

std::string ParamSet::signature() const {
  std::ostringstream os;
  for (const auto& t : tensors) os << t.name << ':' << shape_string(t.value.shape()) << ';';
  return os.str();
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != other.tensors[i].name || tensors[i].value.shape() != other.tensors[i].value.shape()) {
      return false;
    }
  }
  return true;
}

ParamSet zeros_like(const ParamSet& p) {
  ParamSet out = p;
  for (auto& t : out.tensors) t.value.fill(0.0);
  return out;
}

ParamSet subtract(const ParamSet& a, const ParamSet& b) {
  check_layout(a, b);
  ParamSet out = a;
  for (std::size_t i = 0; i < out.tensors.size(); ++i) {
    auto dst = out.tensors[i].value.values();
    auto src = b.tensors[i].value.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= src[j];
  }
  return out;
}

void axpy(Real alpha, const ParamSet& x, ParamSet& y) {
  check_layout(x, y);
  for (std::size_t i = 0; i < y.tensors.size(); ++i) {
    auto dst = y.tensors[i].value.values();
    auto src = x.tensors[i].value.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += alpha * src[j];
  }
}

void scale(ParamSet& p, Real alpha) {
  for (auto& t : p.tensors) {
    for (auto& v : t.value.values()) v *= alpha;
  }
}

Real l2_norm(const ParamSet& p) {
  Real s = 0.0;
  for (const auto& t : p.tensors) {
    for (Real v : t.value.values()) s += v * v;
  }
  return std::sqrt(s);
}

Real l2_distance(const ParamSet& a, const ParamSet& b) { return l2_norm(subtract(a, b)); }

bool all_finite(const ParamSet& p) {
  for (const auto& t : p.tensors) {
    if (!all_finite(t.value.values())) return false;
  }
  return true;
}

void round_to_f32(ParamSet& p) {
  for (auto& t : p.tensors) {
    for (auto& v : t.value.values()) v = static_cast<Real>(static_cast<float>(v));
  }
}

std::string serialize_checkpoint(const ParamSet& params) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  util::write_le<std::uint32_t>(out, kVersion);
  util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  std::vector<float> buffer;
  for (const auto& t : params.tensors) {
    util::write_string(out, t.name);
    util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (int d : t.value.shape()) util::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    buffer.assign(t.value.values().begin(), t.value.values().end());
    util::write_f32_span(out, buffer);
  }
  return std::move(out).str();
}

ParamSet deserialize_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  require(in && std::equal(magic, magic + 4, kMagic), ErrorCategory::kIo, "not a checkpoint file");
  const auto version = util::read_le<std::uint32_t>(in);
  require(version == kVersion, ErrorCategory::kIo, "unsupported checkpoint version");
  const auto count = util::read_le<std::uint32_t>(in);
  ParamSet out;
  std::vector<float> buffer;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = util::read_string(in);
    const auto rank = util::read_le<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(util::read_le<std::uint32_t>(in));
    buffer.resize(shape_size(shape));
    util::read_f32_span(in, buffer);
    t.value = Tensor(shape, std::vector<Real>(buffer.begin(), buffer.end()));
    out.tensors.push_back(std::move(t));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  const auto bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace feddig::nn

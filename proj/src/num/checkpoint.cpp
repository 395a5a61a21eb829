#include "hrl4pfg/num/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace hrl4pfg::num {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic);
  for (const auto& [name, t] : ckpt) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double x : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
  Reader r(bytes.substr(kCheckpointMagic.size()));
  Checkpoint out;
  while (!r.done()) {
    NamedTensor nt;
    nt.name = std::string(r.take(r.u64()));
    const std::uint64_t rank = r.u64();
    if (rank > 8) throw std::runtime_error("checkpoint: implausible rank for " + nt.name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    std::vector<double> data(shape_size(shape));
    for (double& x : data) x = std::bit_cast<double>(r.u64());
    nt.value = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void append_params(Checkpoint& out, const ParamStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) out.push_back({store.full_name(i), store.value(i)});
}

void load_params(ParamStore& store, const Checkpoint& ckpt) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string& name = store.full_name(i);
    const NamedTensor* found = nullptr;
    for (const auto& nt : ckpt) {
      if (nt.name == name) {
        found = &nt;
        break;
      }
    }
    if (!found) throw std::runtime_error("checkpoint: missing tensor " + name);
    if (found->value.shape() != store.value(i).shape()) {
      throw std::runtime_error("checkpoint: tensor " + name + " has shape " + shape_string(found->value.shape()) +
                               ", config expects " + shape_string(store.value(i).shape()));
    }
    store.set(i, found->value);
  }
}

}  // namespace hrl4pfg::num

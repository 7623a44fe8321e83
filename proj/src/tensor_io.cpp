#include "rainmamba/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rainmamba::io {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t take(std::size_t width) {
    require(pos_ + width <= bytes_.size(), "truncated tensor file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }

  void expect_magic(const char* magic) {
    require(bytes_.size() >= 4 && bytes_.compare(0, 4, magic) == 0,
            std::string("bad magic, expected ") + magic);
    pos_ = 4;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint32_t> read_header(Reader& r, const char* magic) {
  r.expect_magic(magic);
  const std::uint32_t version = r.u32();
  require(version == kVersion, "unsupported format version " + std::to_string(version));
  const std::uint32_t ndim = r.u32();
  require(ndim <= 16, "implausible ndim " + std::to_string(ndim));
  std::vector<std::uint32_t> dims(ndim);
  for (auto& d : dims) d = r.u32();
  return dims;
}

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

}  // namespace

std::string encode_rmtn(const RawTensor& t) {
  require(element_count(t.dims) == t.values.size(), "dimension mismatch");
  std::string out = "RMTN";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  out.reserve(out.size() + 4 * t.values.size());
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RawTensor decode_rmtn(const std::string& bytes) {
  Reader r(bytes);
  RawTensor t;
  t.dims = read_header(r, "RMTN");
  const std::size_t n = element_count(t.dims);
  t.values.resize(n);
  for (auto& v : t.values) v = std::bit_cast<float>(r.u32());
  require(r.done(), "trailing bytes in tensor file");
  return t;
}

RawTensor to_raw(const VideoTensor& x) {
  RawTensor raw;
  raw.dims = {static_cast<std::uint32_t>(x.channels()), static_cast<std::uint32_t>(x.time()),
              static_cast<std::uint32_t>(x.height()), static_cast<std::uint32_t>(x.width())};
  raw.values.reserve(x.size());
  for (double v : x.values()) raw.values.push_back(static_cast<float>(v));
  return raw;
}

VideoTensor video_from_raw(const RawTensor& raw) {
  require(raw.dims.size() == 4, "expected a 4-d (C,T,H,W) tensor");
  std::vector<double> values(raw.values.begin(), raw.values.end());
  return VideoTensor(raw.dims[0], raw.dims[1], raw.dims[2], raw.dims[3], std::move(values));
}

std::string encode_rmpm(const RawPermutation& p) {
  require(element_count(p.dims) == p.perm.size(), "dimension mismatch");
  std::string out = "RMPM";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(p.dims.size()));
  for (auto d : p.dims) put_u32(out, d);
  for (auto v : p.perm) put_u64(out, v);
  return out;
}

RawPermutation decode_rmpm(const std::string& bytes) {
  Reader r(bytes);
  RawPermutation p;
  p.dims = read_header(r, "RMPM");
  p.perm.resize(element_count(p.dims));
  for (auto& v : p.perm) v = r.u64();
  require(r.done(), "trailing bytes in permutation file");
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rainmamba::io

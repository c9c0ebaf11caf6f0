#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "soda/error.hpp"

namespace soda::cli {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error(ErrorCode::IoFailure, "cannot initialize SHA-256");
  }
  void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

Manifest::Manifest(std::string command, nlohmann::ordered_json config, std::uint64_t seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed) {}

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.generic_string(), sha256_file(path));
}

void Manifest::add_artifact(const std::filesystem::path& out_dir, const std::filesystem::path& relative) {
  artifacts_.emplace_back(relative.generic_string(), sha256_file(out_dir / relative));
}

void Manifest::write(const std::filesystem::path& out_dir) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["seed"] = seed_;
  j["config"] = config_;
  j["config_sha256"] = sha256_hex(config_.dump());
  auto list = [](const auto& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [p, d] : v) arr.push_back({{"path", p}, {"sha256", d}});
    return arr;
  };
  j["inputs"] = list(inputs_);
  j["artifacts"] = list(artifacts_);
  j["summary"] = summary_;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (out_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace soda::cli

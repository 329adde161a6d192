#include "lab/digest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <openssl/evp.h>

namespace lab {

namespace fs = std::filesystem;

namespace {

std::string hex(const unsigned char* data, unsigned len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

struct Hasher {
    EVP_MD_CTX* ctx;
    Hasher() : ctx(EVP_MD_CTX_new()) {
        if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 init failed");
    }
    ~Hasher() { EVP_MD_CTX_free(ctx); }
    void update(const void* data, size_t len) {
        if (EVP_DigestUpdate(ctx, data, len) != 1)
            throw std::runtime_error("sha256 update failed");
    }
    std::string finish() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned len = 0;
        if (EVP_DigestFinal_ex(ctx, md, &len) != 1)
            throw std::runtime_error("sha256 final failed");
        return hex(md, len);
    }
};

} // namespace

std::string sha256_bytes(const std::string& bytes) {
    Hasher h;
    h.update(bytes.data(), bytes.size());
    return h.finish();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("digest: cannot open " + path);
    Hasher h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h.update(buf, static_cast<size_t>(in.gcount()));
    }
    return h.finish();
}

std::string sha256_path(const std::string& path) {
    if (fs::is_regular_file(path)) return sha256_file(path);
    if (!fs::is_directory(path))
        throw std::runtime_error("digest: no such artifact: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file())
            entries.emplace_back(fs::relative(e.path(), path).generic_string(),
                                 sha256_file(e.path().string()));
    std::sort(entries.begin(), entries.end());
    Hasher h;
    for (const auto& [rel, digest] : entries) {
        h.update(rel.data(), rel.size());
        h.update("\0", 1);
        h.update(digest.data(), digest.size());
        h.update("\n", 1);
    }
    return h.finish();
}

} // namespace lab

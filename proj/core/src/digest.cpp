#include "mcjudge/digest.hpp"

#include "mcjudge/error.hpp"

#include <array>
#include <memory>

#include <openssl/evp.h>

namespace mcjudge {

namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw Error("SHA-256 initialisation failed");
        }
    }

    void update(std::string_view data)
    {
        if (EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1) {
            throw Error("SHA-256 update failed");
        }
    }

    std::string hex()
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
            throw Error("SHA-256 finalisation failed");
        }
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out += kHex[md[i] >> 4];
            out += kHex[md[i] & 0x0f];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data)
{
    Sha256 h;
    h.update(data);
    return h.hex();
}

std::string digest_fields(std::initializer_list<std::string_view> fields)
{
    Sha256 h;
    for (std::string_view f : fields) {
        const std::string len = std::to_string(f.size()) + ":";
        h.update(len);
        h.update(f);
    }
    return h.hex();
}

}  // namespace mcjudge

#pragma once

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace glucoguard {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

/// Fixed 32-byte value. The tag keeps digests, user ids and keys from
/// being mixed up at compile time.
template <class Tag>
struct Fixed32 {
    std::array<std::uint8_t, 32> bytes{};

    static constexpr std::size_t size() { return 32; }
    const std::uint8_t* data() const { return bytes.data(); }
    std::uint8_t* data() { return bytes.data(); }
    ByteSpan span() const { return {bytes.data(), bytes.size()}; }

    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }

    friend auto operator<=>(const Fixed32&, const Fixed32&) = default;
};

struct DigestTag {};
struct UserIdTag {};
struct KeyTag {};

using Digest = Fixed32<DigestTag>;
using UserId = Fixed32<UserIdTag>;
using Key = Fixed32<KeyTag>;

std::string to_hex(ByteSpan data);

template <class Tag>
std::string to_hex(const Fixed32<Tag>& v) {
    return to_hex(v.span());
}

/// Decodes lowercase or uppercase hex; throws std::invalid_argument on
/// odd length or a non-hex character.
Bytes from_hex(std::string_view hex);

template <class T>
T fixed_from_hex(std::string_view hex) {
    if (hex.size() != 64) throw std::invalid_argument("expected 64 hex characters");
    auto raw = from_hex(hex);
    T out;
    std::memcpy(out.data(), raw.data(), 32);
    return out;
}

template <class Tag>
Fixed32<Tag> fixed_from_span(ByteSpan s) {
    if (s.size() != 32) throw std::invalid_argument("expected 32 bytes");
    Fixed32<Tag> out;
    std::memcpy(out.data(), s.data(), 32);
    return out;
}

/// Big-endian append/read helpers shared by every on-disk and on-chain format.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { be(v); }
    void u32(std::uint32_t v) { be(v); }
    void u64(std::uint64_t v) { be(v); }
    void i32(std::int32_t v) { be(static_cast<std::uint32_t>(v)); }
    void f64(double v) { be(std::bit_cast<std::uint64_t>(v)); }
    void raw(ByteSpan s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    template <class Tag>
    void fixed(const Fixed32<Tag>& v) { raw(v.span()); }

    const Bytes& bytes() const& { return buf_; }
    Bytes take() && { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    template <class U>
    void be(U v) {
        for (int shift = static_cast<int>(sizeof(U) * 8) - 8; shift >= 0; shift -= 8)
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    Bytes buf_;
};

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return be<std::uint16_t>(); }
    std::uint32_t u32() { return be<std::uint32_t>(); }
    std::uint64_t u64() { return be<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(be<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(be<std::uint64_t>()); }
    ByteSpan raw(std::size_t n) { return take(n); }
    template <class T>
    T fixed() { return fixed_from_span<typename TagOf<T>::type>(take(32)); }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return remaining() == 0; }

private:
    template <class T> struct TagOf;
    template <class Tag> struct TagOf<Fixed32<Tag>> { using type = Tag; };

    ByteSpan take(std::size_t n) {
        if (remaining() < n) throw DecodeError("unexpected end of input");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <class U>
    U be() {
        auto s = take(sizeof(U));
        U v = 0;
        for (auto b : s) v = static_cast<U>((v << 8) | b);
        return v;
    }

    ByteSpan data_;
    std::size_t pos_ = 0;
};

}  // namespace glucoguard

template <class Tag>
struct std::hash<glucoguard::Fixed32<Tag>> {
    std::size_t operator()(const glucoguard::Fixed32<Tag>& v) const noexcept {
        std::size_t h;
        std::memcpy(&h, v.data(), sizeof(h));
        return h;
    }
};

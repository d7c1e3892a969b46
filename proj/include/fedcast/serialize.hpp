#pragma once

// Binary frame format for named tensors.
//
// Checkpoint file = magic "FCAST01\n" followed by one frame per tensor in
// lexicographic name order. Frame layout (all little-endian):
//   u32 name length | name bytes (UTF-8) | u32 rank | u32 dims... | f64 values...
// Partial-update payloads reuse the same frames without the file magic.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/tensor.hpp"

namespace fedcast {

inline constexpr std::string_view kCheckpointMagic = "FCAST01\n";

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    bool done() const { return pos_ == size_; }

    std::uint32_t u32() {
        check(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        check(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(std::size_t n) {
        check(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void check(std::size_t n) const {
        if (pos_ + n > size_) throw IoError("tensor frame: truncated input");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void encode_tensor_frame(const TensorName& name, const Tensor& tensor,
                                std::vector<std::uint8_t>& out) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (std::uint32_t d : tensor.shape) detail::put_u32(out, d);
    for (double v : tensor.values) detail::put_f64(out, v);
}

inline std::size_t tensor_frame_size(const TensorName& name, const Tensor& tensor) {
    return 4 + name.size() + 4 + 4 * tensor.shape.size() + 8 * tensor.values.size();
}

inline std::pair<TensorName, Tensor> decode_tensor_frame(detail::Reader& in) {
    const std::uint32_t name_len = in.u32();
    TensorName name = in.bytes(name_len);
    Tensor t;
    const std::uint32_t rank = in.u32();
    t.shape.reserve(rank);
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        t.shape.push_back(in.u32());
        numel *= t.shape.back();
    }
    t.values.reserve(numel);
    for (std::size_t i = 0; i < numel; ++i) t.values.push_back(in.f64());
    return {std::move(name), std::move(t)};
}

inline std::vector<std::uint8_t> encode_parameter_set(const ParameterSet& params) {
    std::vector<std::uint8_t> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
    for (const auto& [name, tensor] : params.entries) encode_tensor_frame(name, tensor, out);
    return out;
}

inline ParameterSet decode_parameter_set(const std::uint8_t* data, std::size_t size) {
    if (size < kCheckpointMagic.size() ||
        std::memcmp(data, kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
        throw IoError("checkpoint: bad magic");
    detail::Reader in(data + kCheckpointMagic.size(), size - kCheckpointMagic.size());
    ParameterSet params;
    while (!in.done()) {
        auto [name, tensor] = decode_tensor_frame(in);
        if (!params.entries.emplace(std::move(name), std::move(tensor)).second)
            throw IoError("checkpoint: duplicate tensor name");
    }
    return params;
}

inline void save_parameter_set(const std::string& path, const ParameterSet& params) {
    const auto bytes = encode_parameter_set(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

inline ParameterSet load_parameter_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_parameter_set(bytes.data(), bytes.size());
}

}  // namespace fedcast

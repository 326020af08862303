#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcn/tensor.hpp"

namespace vcn {

// Checkpoint container: magic "VCNCKPT1", u64 record count, then per
// record u32 name length, utf-8 name, u8 dtype tag, u32 rank, u64 dims,
// row-major little-endian payload. Round-trips byte-identically.

enum class CkptDtype : std::uint8_t { f32 = 1, f64 = 2, u64 = 3 };

struct CkptRecord {
    std::string name;
    CkptDtype dtype = CkptDtype::f32;
    Dims dims;
    std::vector<std::uint8_t> bytes;

    template <class T>
    static CkptRecord from_tensor(const std::string& name, const Tensor<T>& t) {
        static_assert(sizeof(T) == 4 || sizeof(T) == 8);
        CkptRecord r;
        r.name = name;
        r.dtype = sizeof(T) == 4 ? CkptDtype::f32 : CkptDtype::f64;
        r.dims = t.dims;
        r.bytes.resize(t.data.size() * sizeof(T));
        std::memcpy(r.bytes.data(), t.data.data(), r.bytes.size());
        return r;
    }

    static CkptRecord from_u64(const std::string& name, std::uint64_t v) {
        CkptRecord r;
        r.name = name;
        r.dtype = CkptDtype::u64;
        r.dims = {};
        r.bytes.resize(8);
        std::memcpy(r.bytes.data(), &v, 8);
        return r;
    }

    template <class T>
    Tensor<T> to_tensor() const {
        static_assert(sizeof(T) == 4 || sizeof(T) == 8);
        const CkptDtype want = sizeof(T) == 4 ? CkptDtype::f32 : CkptDtype::f64;
        if (dtype != want) throw std::runtime_error("checkpoint record '" + name + "': dtype mismatch");
        Tensor<T> t(dims);
        if (bytes.size() != t.data.size() * sizeof(T))
            throw std::runtime_error("checkpoint record '" + name + "': size mismatch");
        std::memcpy(t.data.data(), bytes.data(), bytes.size());
        return t;
    }

    std::uint64_t to_u64() const {
        if (dtype != CkptDtype::u64 || bytes.size() != 8)
            throw std::runtime_error("checkpoint record '" + name + "': not u64");
        std::uint64_t v;
        std::memcpy(&v, bytes.data(), 8);
        return v;
    }
};

void save_checkpoint(const std::string& path, const std::vector<CkptRecord>& records);
std::vector<CkptRecord> load_checkpoint(const std::string& path);

const CkptRecord* find_record(const std::vector<CkptRecord>& records, const std::string& name);

} // namespace vcn

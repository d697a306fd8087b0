#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

namespace milrisk::binary {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.write(bytes, sizeof(T));
}

/// Returns false on a short read.
template <typename T>
bool get(std::istream& in, T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char bytes[sizeof(T)];
    if (!in.read(bytes, sizeof(T))) {
        return false;
    }
    std::memcpy(&value, bytes, sizeof(T));
    return true;
}

}  // namespace milrisk::binary

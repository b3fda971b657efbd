#include "dwrecon/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dw::io {

namespace {

constexpr char kMagic[4] = {'D', 'W', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "DWT1 payload I/O assumes a little-endian host");

template <typename T>
void save_impl(const TensorT<T>& t, const std::string& path, std::uint8_t dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tensor: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    os.put(static_cast<char>(dtype));
    os.put(static_cast<char>(t.rank()));
    for (std::size_t d : t.dims()) {
        const auto v = static_cast<std::uint32_t>(d);
        os.write(reinterpret_cast<const char*>(&v), 4);
    }
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!os) throw std::runtime_error("tensor: write failed for " + path);
}

struct RawTensor {
    std::vector<std::size_t> dims;
    std::vector<float> f32;
    std::vector<double> f64;
    bool is_f64 = false;
};

RawTensor load_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tensor: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("tensor: bad magic in " + path);
    const int dtype = is.get();
    const int ndim = is.get();
    if (dtype != 0 && dtype != 1) throw std::runtime_error("tensor: unknown dtype in " + path);
    if (ndim < 1 || ndim > 4) throw std::runtime_error("tensor: bad rank in " + path);

    RawTensor raw;
    raw.is_f64 = dtype == 1;
    std::size_t count = 1;
    for (int i = 0; i < ndim; ++i) {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 4);
        raw.dims.push_back(v);
        count *= v;
    }
    if (!is) throw std::runtime_error("tensor: truncated header in " + path);
    if (raw.is_f64) {
        raw.f64.resize(count);
        is.read(reinterpret_cast<char*>(raw.f64.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        raw.f32.resize(count);
        is.read(reinterpret_cast<char*>(raw.f32.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
    }
    if (!is) throw std::runtime_error("tensor: truncated payload in " + path);
    return raw;
}

}  // namespace

void save_tensor(const Tensor& t, const std::string& path) { save_impl(t, path, 1); }
void save_tensor(const TensorF& t, const std::string& path) { save_impl(t, path, 0); }

Tensor load_tensor(const std::string& path) {
    RawTensor raw = load_raw(path);
    if (raw.is_f64) return Tensor(raw.dims, std::move(raw.f64));
    std::vector<double> data(raw.f32.begin(), raw.f32.end());
    return Tensor(raw.dims, std::move(data));
}

TensorF load_tensor_f(const std::string& path) {
    RawTensor raw = load_raw(path);
    if (!raw.is_f64) return TensorF(raw.dims, std::move(raw.f32));
    std::vector<float> data(raw.f64.begin(), raw.f64.end());
    return TensorF(raw.dims, std::move(data));
}

}  // namespace dw::io

#include "dwrecon/tensor.hpp"

#include <cmath>
#include <sstream>

namespace dw {

template <typename T>
bool TensorT<T>::all_finite() const {
    for (const T& v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

template class TensorT<float>;
template class TensorT<double>;

std::string dims_to_string(const std::vector<std::size_t>& dims) {
    std::ostringstream os;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    return os.str();
}

}  // namespace dw

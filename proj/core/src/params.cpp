#include "fseg/params.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace fseg {

// wire blobs are little-endian f32; raw memcpy is only valid on LE targets
static_assert(std::endian::native == std::endian::little);

bool ParameterVector::same_layout(const ParameterVector& other) const {
    if (values.size() != other.values.size()) return false;
    if (layout.size() != other.layout.size()) return false;
    for (size_t i = 0; i < layout.size(); ++i) {
        const Segment& a = layout[i];
        const Segment& b = other.layout[i];
        if (a.name != b.name || a.offset != b.offset || a.length != b.length) return false;
    }
    return true;
}

void validate_layout(const ParameterVector& pv) {
    if (pv.values.empty()) throw std::invalid_argument("params: total length must be > 0");
    size_t cursor = 0;
    for (const Segment& s : pv.layout) {
        if (s.offset != cursor)
            throw std::invalid_argument("params: segments must be contiguous (bad offset for '" +
                                        s.name + "')");
        if (s.length == 0)
            throw std::invalid_argument("params: zero-length segment '" + s.name + "'");
        cursor += s.length;
    }
    if (cursor != pv.values.size())
        throw std::invalid_argument("params: segments do not cover the array exactly");
}

std::vector<float> param_slice(const ParameterVector& pv, const std::string& name) {
    for (const Segment& s : pv.layout) {
        if (s.name == name)
            return std::vector<float>(pv.values.begin() + static_cast<long>(s.offset),
                                      pv.values.begin() + static_cast<long>(s.offset + s.length));
    }
    throw std::invalid_argument("params: unknown segment '" + name + "'");
}

ParameterVector param_assemble(
    const std::vector<std::pair<std::string, std::vector<float>>>& segments) {
    ParameterVector pv;
    for (const auto& [name, vals] : segments) {
        Segment s{name, pv.values.size(), vals.size()};
        pv.values.insert(pv.values.end(), vals.begin(), vals.end());
        pv.layout.push_back(std::move(s));
    }
    validate_layout(pv);
    return pv;
}

std::vector<uint8_t> params_to_blob(const ParameterVector& pv) {
    std::vector<uint8_t> blob(pv.values.size() * 4);
    static_assert(sizeof(float) == 4);
    std::memcpy(blob.data(), pv.values.data(), blob.size());
    return blob;
}

void params_from_blob(ParameterVector& pv, const std::vector<uint8_t>& blob) {
    if (blob.size() != pv.values.size() * 4)
        throw std::invalid_argument("params: blob length does not match layout");
    std::memcpy(pv.values.data(), blob.data(), blob.size());
}

} // namespace fseg

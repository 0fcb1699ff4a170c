#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fseg {

struct Segment {
    std::string name;
    size_t offset = 0;
    size_t length = 0;
};

// Flat float array with a named segment layout. This is the unit exchanged
// in federation; the layout must be contiguous, non-overlapping and cover
// the array exactly.
struct ParameterVector {
    std::vector<float> values;
    std::vector<Segment> layout;

    size_t size() const { return values.size(); }
    bool same_layout(const ParameterVector& other) const;
};

// Throws std::invalid_argument if the layout is not a contiguous,
// non-overlapping exact cover of values (or total length is zero).
void validate_layout(const ParameterVector& pv);

// Copy of the named segment. Unknown name -> std::invalid_argument.
std::vector<float> param_slice(const ParameterVector& pv, const std::string& name);

// Concatenates (name, values) pairs in order into a fresh ParameterVector.
// Round-trips bit-for-bit with param_slice.
ParameterVector param_assemble(const std::vector<std::pair<std::string, std::vector<float>>>& segments);

// Raw little-endian f32 blob, in layout order, no header.
std::vector<uint8_t> params_to_blob(const ParameterVector& pv);
// Fills pv.values from a blob; length mismatch -> std::invalid_argument.
void params_from_blob(ParameterVector& pv, const std::vector<uint8_t>& blob);

} // namespace fseg

#ifndef SYLGL_TENSOR_IO_HPP
#define SYLGL_TENSOR_IO_HPP

#include <iosfwd>
#include <string>

#include "sylgl/tensor.hpp"

namespace sylgl {

/// SYGT binary tensor format, little-endian throughout:
///   bytes 0..3   magic "SYGT"
///   byte  4      version 0x01
///   bytes 5..8   u32 K (number of modes)
///   then K u32   mode sizes m_1..m_K
///   then m f64   values in first-index-fastest order (m = prod m_k)
/// Writing then reading reproduces the tensor bit-exactly (doubles are
/// moved as raw bit patterns).
void write_sygt(std::ostream& os, const DenseTensor& t);
void write_sygt_file(const std::string& path, const DenseTensor& t);

DenseTensor read_sygt(std::istream& is);
DenseTensor read_sygt_file(const std::string& path);

}  // namespace sylgl

#endif

/*
 * Prior-Knowledge Brain Tumor Segmentation Toolkit (pbts)
 *
 * Copyright 2026 The pbts Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pbts/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pbts/errors.hpp"

namespace pbts {

namespace {

// NIfTI-1 header, 348 bytes. All fields little-endian; this implementation
// only supports little-endian hosts/files.
struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration, toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;
constexpr std::int16_t kDtUint16 = 512;

bool has_gz_suffix(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> buf(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(buf.data()), size);
  if (!in) throw InputError("failed to read file: " + path);
  return buf;
}

std::vector<unsigned char> gzip_decompress(const std::vector<unsigned char>& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error("zlib inflateInit2 failed");
  std::vector<unsigned char> out;
  out.reserve(in.size() * 4);
  unsigned char chunk[65536];
  zs.next_in = const_cast<unsigned char*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw InputError("corrupt gzip stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

// gzip with a fixed header (mtime 0, OS 3) so output bytes depend only on
// the payload
std::vector<unsigned char> gzip_compress(const std::vector<unsigned char>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("zlib deflateInit2 failed");
  gz_header gzh{};
  gzh.time = 0;
  gzh.os = 3;
  if (deflateSetHeader(&zs, &gzh) != Z_OK) {
    deflateEnd(&zs);
    throw Error("zlib deflateSetHeader failed");
  }
  std::vector<unsigned char> out;
  out.reserve(in.size() / 2 + 128);
  unsigned char chunk[65536];
  zs.next_in = const_cast<unsigned char*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = deflate(&zs, Z_FINISH);
    if (rc == Z_STREAM_ERROR) {
      deflateEnd(&zs);
      throw Error("zlib deflate failed");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

void write_file(const std::string& path, const std::vector<unsigned char>& payload, bool gz) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open file for writing: " + path);
  if (gz) {
    const std::vector<unsigned char> packed = gzip_compress(payload);
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
  } else {
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw Error("failed to write file: " + path);
}

NiftiHeader make_header(const Grid& grid, std::int16_t datatype, std::int16_t bitpix) {
  NiftiHeader h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(grid.dims[0]);
  h.dim[2] = static_cast<std::int16_t>(grid.dims[1]);
  h.dim[3] = static_cast<std::int16_t>(grid.dims[2]);
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(grid.spacing[0]);
  h.pixdim[2] = static_cast<float>(grid.spacing[1]);
  h.pixdim[3] = static_cast<float>(grid.spacing[2]);
  for (int a = 4; a < 8; ++a) h.pixdim[a] = 0.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2; // millimetres
  std::strncpy(h.descrip, "pbts", sizeof(h.descrip) - 1);
  h.qform_code = 0;
  h.sform_code = 1;
  h.srow_x[0] = static_cast<float>(grid.spacing[0]);
  h.srow_y[1] = static_cast<float>(grid.spacing[1]);
  h.srow_z[2] = static_cast<float>(grid.spacing[2]);
  h.magic[0] = 'n';
  h.magic[1] = '+';
  h.magic[2] = '1';
  h.magic[3] = '\0';
  return h;
}

void append_header(std::vector<unsigned char>& payload, const NiftiHeader& h) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(&h);
  payload.insert(payload.end(), p, p + sizeof(NiftiHeader));
  // 4-byte extension indicator: no extensions
  payload.insert(payload.end(), {0, 0, 0, 0});
}

struct Parsed {
  NiftiHeader header;
  std::vector<unsigned char> raw; // full decompressed file
};

Parsed parse_file(const std::string& path) {
  std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = gzip_decompress(bytes);
  if (bytes.size() < sizeof(NiftiHeader)) throw InputError("not a NIfTI-1 file: " + path);
  Parsed p;
  std::memcpy(&p.header, bytes.data(), sizeof(NiftiHeader));
  if (p.header.sizeof_hdr != 348) {
    throw InputError("unsupported NIfTI file (big-endian or NIfTI-2?): " + path);
  }
  if (std::strncmp(p.header.magic, "n+1", 3) != 0) {
    throw InputError("only single-file NIfTI-1 (.nii/.nii.gz) is supported: " + path);
  }
  if (p.header.dim[0] < 3) throw InputError("expected a 3-D volume: " + path);
  for (int a = 4; a <= p.header.dim[0]; ++a) {
    if (p.header.dim[a] > 1) throw InputError("expected a 3-D volume (trailing dims > 1): " + path);
  }
  p.raw = std::move(bytes);
  return p;
}

Grid grid_from_header(const NiftiHeader& h) {
  Grid g;
  for (int a = 0; a < 3; ++a) {
    g.dims[a] = h.dim[a + 1];
    g.spacing[a] = std::fabs(static_cast<double>(h.pixdim[a + 1]));
    if (g.spacing[a] == 0.0) g.spacing[a] = 1.0;
  }
  g.validate();
  return g;
}

Affine affine_from_header(const NiftiHeader& h, const Grid& grid) {
  if (h.sform_code > 0) {
    Affine a{};
    for (int c = 0; c < 4; ++c) {
      a[static_cast<std::size_t>(c)] = h.srow_x[c];
      a[static_cast<std::size_t>(4 + c)] = h.srow_y[c];
      a[static_cast<std::size_t>(8 + c)] = h.srow_z[c];
    }
    return a;
  }
  return default_affine(grid);
}

template <typename T>
void copy_cast(const unsigned char* src, std::size_t n, double slope, double inter,
               std::vector<double>& out) {
  const T* p = reinterpret_cast<const T*>(src);
  for (std::size_t v = 0; v < n; ++v) out[v] = static_cast<double>(p[v]) * slope + inter;
}

std::vector<double> decode_data(const Parsed& p, const Grid& grid) {
  const std::size_t n = grid.voxel_count();
  const std::size_t offset = static_cast<std::size_t>(p.header.vox_offset);
  const std::size_t bytes_per = static_cast<std::size_t>(p.header.bitpix) / 8;
  if (offset + n * bytes_per > p.raw.size()) throw InputError("NIfTI data truncated");
  double slope = p.header.scl_slope;
  double inter = p.header.scl_inter;
  if (slope == 0.0) {
    slope = 1.0;
    inter = 0.0;
  }
  std::vector<double> out(n);
  const unsigned char* src = p.raw.data() + offset;
  switch (p.header.datatype) {
  case kDtUint8: copy_cast<std::uint8_t>(src, n, slope, inter, out); break;
  case kDtInt16: copy_cast<std::int16_t>(src, n, slope, inter, out); break;
  case kDtUint16: copy_cast<std::uint16_t>(src, n, slope, inter, out); break;
  case kDtInt32: copy_cast<std::int32_t>(src, n, slope, inter, out); break;
  case kDtFloat32: copy_cast<float>(src, n, slope, inter, out); break;
  case kDtFloat64: copy_cast<double>(src, n, slope, inter, out); break;
  default:
    throw InputError("unsupported NIfTI datatype " + std::to_string(p.header.datatype));
  }
  return out;
}

} // namespace

Affine default_affine(const Grid& grid) {
  Affine a{};
  a[0] = grid.spacing[0];
  a[5] = grid.spacing[1];
  a[10] = grid.spacing[2];
  return a;
}

bool affines_match(const Affine& a, const Affine& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

void write_nifti(const std::string& path, const ScalarVolume& vol) {
  vol.grid.validate();
  if (vol.data.size() != vol.grid.voxel_count())
    throw InputError("write_nifti: data length mismatch");
  for (int a = 0; a < 3; ++a) {
    if (vol.grid.dims[a] > std::numeric_limits<std::int16_t>::max())
      throw InputError("write_nifti: dimension too large for NIfTI-1");
  }
  std::vector<unsigned char> payload;
  payload.reserve(352 + vol.data.size() * 4);
  append_header(payload, make_header(vol.grid, kDtFloat32, 32));
  for (double x : vol.data) {
    const float f = static_cast<float>(x);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(&f);
    payload.insert(payload.end(), p, p + 4);
  }
  write_file(path, payload, has_gz_suffix(path));
}

void write_nifti(const std::string& path, const LabelVolume& vol) {
  vol.validate();
  const std::int32_t maxl = vol.max_label();
  std::vector<unsigned char> payload;
  if (maxl <= 255) {
    append_header(payload, make_header(vol.grid, kDtUint8, 8));
    for (std::int32_t l : vol.labels) payload.push_back(static_cast<unsigned char>(l));
  } else if (maxl <= std::numeric_limits<std::int16_t>::max()) {
    append_header(payload, make_header(vol.grid, kDtInt16, 16));
    for (std::int32_t l : vol.labels) {
      const std::int16_t s = static_cast<std::int16_t>(l);
      const unsigned char* p = reinterpret_cast<const unsigned char*>(&s);
      payload.insert(payload.end(), p, p + 2);
    }
  } else {
    append_header(payload, make_header(vol.grid, kDtInt32, 32));
    for (std::int32_t l : vol.labels) {
      const unsigned char* p = reinterpret_cast<const unsigned char*>(&l);
      payload.insert(payload.end(), p, p + 4);
    }
  }
  write_file(path, payload, has_gz_suffix(path));
}

ScalarVolume read_scalar_nifti(const std::string& path, Affine* affine_out) {
  const Parsed p = parse_file(path);
  ScalarVolume vol;
  vol.grid = grid_from_header(p.header);
  vol.data = decode_data(p, vol.grid);
  vol.brain_mask.assign(vol.grid.voxel_count(), 1);
  if (affine_out) *affine_out = affine_from_header(p.header, vol.grid);
  return vol;
}

LabelVolume read_label_nifti(const std::string& path, Affine* affine_out) {
  const Parsed p = parse_file(path);
  LabelVolume vol;
  vol.grid = grid_from_header(p.header);
  const std::vector<double> values = decode_data(p, vol.grid);
  vol.labels.resize(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) {
    const double x = values[v];
    if (!std::isfinite(x) || x < 0.0 || std::fabs(x - std::round(x)) > 1e-6)
      throw InputError("label volume contains non-integer or negative codes: " + path);
    vol.labels[v] = static_cast<std::int32_t>(std::llround(x));
  }
  if (affine_out) *affine_out = affine_from_header(p.header, vol.grid);
  return vol;
}

} // namespace pbts

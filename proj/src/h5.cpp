// Copyright 2026 The neurender Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "h5.hpp"

#include <H5Cpp.h>

#include <vector>

#include "neurender/error.hpp"

namespace neurender::h5 {

struct File::Impl {
  H5::H5File file;
};

namespace {

[[noreturn]] void rethrow(const std::filesystem::path& path, const std::string& what, const H5::Exception& e) {
  throw DataError(path.string() + ": " + what + " (" + e.getDetailMsg() + ")");
}

const H5::PredType& native_type(torch::Dtype dtype) {
  switch (dtype) {
    case torch::kUInt8:
      return H5::PredType::NATIVE_UINT8;
    case torch::kFloat32:
      return H5::PredType::NATIVE_FLOAT;
    case torch::kFloat64:
      return H5::PredType::NATIVE_DOUBLE;
    case torch::kInt64:
      return H5::PredType::NATIVE_INT64;
    default:
      throw ArgumentError("unsupported dtype for HDF5 container");
  }
}

}  // namespace

File::File(const std::filesystem::path& path, Mode mode) : impl_(new Impl), path_(path) {
  H5::Exception::dontPrint();
  try {
    if (mode == Mode::kCreate) {
      impl_->file = H5::H5File(path.string(), H5F_ACC_TRUNC);
    } else {
      if (!std::filesystem::exists(path)) {
        throw DataError(path.string() + ": no such file");
      }
      impl_->file = H5::H5File(path.string(), H5F_ACC_RDONLY);
    }
  } catch (const H5::Exception& e) {
    delete impl_;
    rethrow(path, "cannot open container", e);
  } catch (...) {
    delete impl_;
    throw;
  }
}

File::~File() { delete impl_; }

void File::write(const std::string& name, const torch::Tensor& tensor) {
  auto t = tensor.contiguous().cpu();
  std::vector<hsize_t> dims(t.sizes().begin(), t.sizes().end());
  try {
    H5::DataSpace space(static_cast<int>(dims.size()), dims.data());
    const auto& type = native_type(t.scalar_type());
    auto ds = impl_->file.createDataSet(name, type, space);
    ds.write(t.data_ptr(), type);
  } catch (const H5::Exception& e) {
    rethrow(path_, "cannot write dataset '" + name + "'", e);
  }
}

void File::write_attribute(const std::string& name, const std::string& value) {
  try {
    H5::StrType type(H5::PredType::C_S1, value.empty() ? 1 : value.size());
    auto attr = impl_->file.createAttribute(name, type, H5::DataSpace(H5S_SCALAR));
    attr.write(type, value.empty() ? std::string(" ") : value);
  } catch (const H5::Exception& e) {
    rethrow(path_, "cannot write attribute '" + name + "'", e);
  }
}

bool File::has(const std::string& name) const {
  try {
    return impl_->file.nameExists(name);
  } catch (const H5::Exception&) {
    return false;
  }
}

torch::Tensor File::read(const std::string& name, torch::Dtype dtype, bool* was_integer) const {
  if (!has(name)) {
    throw DataError(path_.string() + ": missing dataset '" + name + "'");
  }
  try {
    auto ds = impl_->file.openDataSet(name);
    auto space = ds.getSpace();
    const int rank = space.getSimpleExtentNdims();
    std::vector<hsize_t> dims(static_cast<size_t>(rank));
    space.getSimpleExtentDims(dims.data());
    std::vector<int64_t> shape(dims.begin(), dims.end());
    if (was_integer != nullptr) {
      *was_integer = ds.getTypeClass() == H5T_INTEGER;
    }
    auto out = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    ds.read(out.data_ptr(), native_type(dtype));
    return out;
  } catch (const H5::Exception& e) {
    rethrow(path_, "cannot read dataset '" + name + "'", e);
  }
}

std::string File::read_attribute(const std::string& name) const {
  try {
    if (!impl_->file.attrExists(name)) {
      return {};
    }
    auto attr = impl_->file.openAttribute(name);
    H5::StrType type = attr.getStrType();
    std::string value;
    attr.read(type, value);
    return value;
  } catch (const H5::Exception& e) {
    rethrow(path_, "cannot read attribute '" + name + "'", e);
  }
}

}  // namespace neurender::h5

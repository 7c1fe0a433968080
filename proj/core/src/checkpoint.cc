// Copyright 2026 The Piper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "piper/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "piper/errors.h"

namespace piper {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

using Eigen::Index;
using Eigen::VectorXd;

void BinaryWriter::Raw(const void* data, std::size_t size) {
  bytes_.append(static_cast<const char*>(data), size);
}

void BinaryWriter::U32(std::uint32_t v) { Raw(&v, sizeof(v)); }
void BinaryWriter::U64(std::uint64_t v) { Raw(&v, sizeof(v)); }
void BinaryWriter::F64(double v) { Raw(&v, sizeof(v)); }

void BinaryWriter::String(const std::string& s) {
  U64(s.size());
  Raw(s.data(), s.size());
}

void BinaryWriter::Vector(const VectorXd& v) {
  U64(static_cast<std::uint64_t>(v.size()));
  Raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void BinaryWriter::Matrix(const Eigen::MatrixXd& m) {
  U64(static_cast<std::uint64_t>(m.rows()));
  U64(static_cast<std::uint64_t>(m.cols()));
  Raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void BinaryWriter::Named(const std::string& name, const VectorXd& v) {
  String(name);
  Vector(v);
}

void BinaryWriter::Adam(const AdamState& adam) {
  Vector(adam.first_moment);
  Vector(adam.second_moment);
  I64(adam.step_count);
  F64(adam.beta1);
  F64(adam.beta2);
  F64(adam.learning_rate);
  F64(adam.eps_hat);
}

void BinaryWriter::Net(const std::string& name, const Network& net) {
  Named(name, net.params);
  Adam(net.adam);
}

void BinaryWriter::Trajectory(const HighTrajectory& sigma) {
  U64(sigma.id);
  Vector(sigma.g_star);
  U64(sigma.states.size());
  for (std::size_t i = 0; i < sigma.states.size(); ++i) {
    Vector(sigma.states[i]);
    Vector(sigma.subgoals[i]);
    Vector(sigma.achieved_tail[i]);
  }
}

void BinaryWriter::Low(const LowTransition& tr) {
  Vector(tr.s);
  Vector(tr.g);
  Vector(tr.a);
  F64(tr.r);
  Vector(tr.s_next);
  Bool(tr.done);
}

void BinaryWriter::High(const HighTransition& tr) {
  Vector(tr.s);
  Vector(tr.g_star);
  Vector(tr.g_t);
  F64(tr.r_sum);
  Vector(tr.s_next);
  Bool(tr.done);
  U64(tr.trajectory_id);
  I64(tr.segment);
  I64(tr.steps);
}

// ------------------------------------------------------------------ reader

void BinaryReader::Raw(void* data, std::size_t size) {
  if (size > bytes_.size() - pos_) throw IoError("checkpoint truncated");
  std::memcpy(data, bytes_.data() + pos_, size);
  pos_ += size;
}

std::size_t BinaryReader::Count(std::size_t element_size) {
  const std::uint64_t n = U64();
  if (element_size > 0 && n > (bytes_.size() - pos_) / element_size) {
    throw IoError("checkpoint corrupt: length exceeds remaining bytes");
  }
  return static_cast<std::size_t>(n);
}

std::uint8_t BinaryReader::U8() {
  std::uint8_t v;
  Raw(&v, 1);
  return v;
}

std::uint32_t BinaryReader::U32() {
  std::uint32_t v;
  Raw(&v, sizeof(v));
  return v;
}

std::uint64_t BinaryReader::U64() {
  std::uint64_t v;
  Raw(&v, sizeof(v));
  return v;
}

double BinaryReader::F64() {
  double v;
  Raw(&v, sizeof(v));
  return v;
}

bool BinaryReader::Bool() {
  const std::uint8_t v = U8();
  if (v > 1) throw IoError("checkpoint corrupt: bad flag");
  return v == 1;
}

std::string BinaryReader::String() {
  const std::size_t n = Count(1);
  std::string s(n, '\0');
  Raw(s.data(), n);
  return s;
}

VectorXd BinaryReader::Vector() {
  const std::size_t n = Count(sizeof(double));
  VectorXd v(static_cast<Index>(n));
  Raw(v.data(), n * sizeof(double));
  return v;
}

Eigen::MatrixXd BinaryReader::Matrix() {
  const std::uint64_t rows = U64();
  const std::size_t cols = Count(sizeof(double));
  if (rows != 0 && cols > (bytes_.size() - pos_) / sizeof(double) / rows) {
    throw IoError("checkpoint corrupt: matrix exceeds remaining bytes");
  }
  Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  Raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return m;
}

VectorXd BinaryReader::Named(const std::string& name, Index expected_size) {
  const std::string found = String();
  if (found != name) {
    throw IoError("checkpoint: expected array '" + name + "', found '" +
                  found + "'");
  }
  VectorXd v = Vector();
  if (expected_size >= 0 && v.size() != expected_size) {
    throw IoError("checkpoint: array '" + name + "' has size " +
                  std::to_string(v.size()) + ", expected " +
                  std::to_string(expected_size));
  }
  return v;
}

void BinaryReader::ExpectTag(const std::string& tag) {
  const std::string found = String();
  if (found != tag) {
    throw IoError("checkpoint: expected section '" + tag + "', found '" +
                  found + "'");
  }
}

AdamState BinaryReader::Adam() {
  AdamState adam;
  adam.first_moment = Vector();
  adam.second_moment = Vector();
  adam.step_count = I64();
  adam.beta1 = F64();
  adam.beta2 = F64();
  adam.learning_rate = F64();
  adam.eps_hat = F64();
  return adam;
}

void BinaryReader::Net(const std::string& name, Network& net) {
  net.params = Named(name, net.spec.ParamCount());
  net.adam = Adam();
  if (net.adam.first_moment.size() != net.params.size() ||
      net.adam.second_moment.size() != net.params.size()) {
    throw IoError("checkpoint: optimizer state of '" + name +
                  "' does not match its parameters");
  }
}

HighTrajectory BinaryReader::Trajectory() {
  HighTrajectory sigma;
  sigma.id = U64();
  sigma.g_star = Vector();
  const std::size_t n = Count(3 * sizeof(std::uint64_t));
  for (std::size_t i = 0; i < n; ++i) {
    sigma.states.push_back(Vector());
    sigma.subgoals.push_back(Vector());
    sigma.achieved_tail.push_back(Vector());
  }
  return sigma;
}

LowTransition BinaryReader::Low() {
  LowTransition tr;
  tr.s = Vector();
  tr.g = Vector();
  tr.a = Vector();
  tr.r = F64();
  tr.s_next = Vector();
  tr.done = Bool();
  return tr;
}

HighTransition BinaryReader::High() {
  HighTransition tr;
  tr.s = Vector();
  tr.g_star = Vector();
  tr.g_t = Vector();
  tr.r_sum = F64();
  tr.s_next = Vector();
  tr.done = Bool();
  tr.trajectory_id = U64();
  tr.segment = static_cast<int>(I64());
  tr.steps = static_cast<int>(I64());
  return tr;
}

// ------------------------------------------------------------------- files

void WriteFileAtomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" +
                    target.parent_path().string() + "': " + ec.message());
    }
  }
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + temp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + temp.string() + "'");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    throw IoError("cannot replace '" + path + "': " + ec.message());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return out.str();
}

}  // namespace piper

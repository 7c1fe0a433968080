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

#ifndef PIPER_CHECKPOINT_H_
#define PIPER_CHECKPOINT_H_

// Little-endian binary records for checkpoints. Every read is bounds-checked
// and a short or corrupt stream raises IoError.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "piper/diffmath.h"
#include "piper/hierarchy.h"
#include "piper/rng.h"

namespace piper {

inline constexpr char kCheckpointMagic[8] = {'P', 'I', 'P', 'E',
                                             'R', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class BinaryWriter {
 public:
  void U8(std::uint8_t v) { Raw(&v, 1); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void I64(std::int64_t v) { U64(static_cast<std::uint64_t>(v)); }
  void F64(double v);
  void Bool(bool v) { U8(v ? 1 : 0); }
  void String(const std::string& s);
  void Vector(const Eigen::VectorXd& v);
  void Matrix(const Eigen::MatrixXd& m);
  // A named flat array; the reader checks the name.
  void Named(const std::string& name, const Eigen::VectorXd& v);
  void Tag(const std::string& tag) { String(tag); }

  void Adam(const AdamState& adam);
  void Net(const std::string& name, const Network& net);
  void Random(const Rng& rng) { String(rng.SerializeState()); }
  void Trajectory(const HighTrajectory& sigma);
  void Low(const LowTransition& tr);
  void High(const HighTransition& tr);

  const std::string& bytes() const { return bytes_; }

 private:
  void Raw(const void* data, std::size_t size);
  std::string bytes_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  std::int64_t I64() { return static_cast<std::int64_t>(U64()); }
  double F64();
  bool Bool();
  std::string String();
  Eigen::VectorXd Vector();
  Eigen::MatrixXd Matrix();
  // Reads a named array and checks its name and, when expected_size >= 0,
  // its length.
  Eigen::VectorXd Named(const std::string& name,
                        Eigen::Index expected_size = -1);
  void ExpectTag(const std::string& tag);

  AdamState Adam();
  // Overwrites params and optimizer state of a network with the same spec.
  void Net(const std::string& name, Network& net);
  void Random(Rng& rng) { rng.RestoreState(String()); }
  HighTrajectory Trajectory();
  LowTransition Low();
  HighTransition High();

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Raw(void* data, std::size_t size);
  std::size_t Count(std::size_t element_size);
  std::string bytes_;
  std::size_t pos_ = 0;
};

// Atomic file replacement: write to a sibling temp file, then rename.
void WriteFileAtomic(const std::string& path, const std::string& contents);
std::string ReadFile(const std::string& path);

}  // namespace piper

#endif  // PIPER_CHECKPOINT_H_

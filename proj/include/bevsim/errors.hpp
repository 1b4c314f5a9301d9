#pragma once

#include <stdexcept>
#include <string>

namespace bevsim {

struct InvalidScene : std::runtime_error {
  explicit InvalidScene(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateCenters : std::runtime_error {
  DegenerateCenters() : std::runtime_error("coincident circle centers") {}
};

struct EmptyMask : std::runtime_error {
  EmptyMask() : std::runtime_error("no samples selected by mask/frame range") {}
};

struct InsufficientPreCollisionFrames : std::runtime_error {
  int body;
  explicit InsufficientPreCollisionFrames(int body_id)
      : std::runtime_error("fewer than 3 frames precede the first collision of body " +
                           std::to_string(body_id)),
        body(body_id) {}
};

struct NonFiniteObjective : std::runtime_error {
  NonFiniteObjective() : std::runtime_error("objective evaluated to a non-finite value") {}
};

struct GenerationExhausted : std::runtime_error {
  GenerationExhausted() : std::runtime_error("scene generation failed after 1000 attempts") {}
};

struct RayParallelToGround : std::runtime_error {
  RayParallelToGround() : std::runtime_error("image ray does not intersect the ground plane") {}
};

struct DegenerateConfiguration : std::runtime_error {
  explicit DegenerateConfiguration(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownBody : std::runtime_error {
  explicit UnknownBody(int body_id)
      : std::runtime_error("unknown body id " + std::to_string(body_id)) {}
};

struct UniqueViolation : std::runtime_error {
  explicit UniqueViolation(std::size_t n)
      : std::runtime_error("Unique expects exactly one item, got " + std::to_string(n)) {}
};

struct TypeMismatch : std::runtime_error {
  explicit TypeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownConcept : std::runtime_error {
  explicit UnknownConcept(const std::string& concept_name)
      : std::runtime_error("unknown concept: " + concept_name) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bevsim

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace vemsad {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class EmptyDirichletError : public Error {
 public:
  using Error::Error;
};

class DegenerateCellError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DegenerateFaceError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class SingularProjectionError : public Error {
 public:
  using Error::Error;
};

class NonSPDError : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class IOError : public Error {
 public:
  using Error::Error;
};

}  // namespace vemsad

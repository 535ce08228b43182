#pragma once

#include <string>

#include "lagflow/fields.hpp"

namespace lagflow::detail {

class FieldImpl {
 public:
  FieldImpl(std::string name, int dim, FieldMetadata meta)
      : name_(std::move(name)), dim_(dim), meta_(meta) {}
  virtual ~FieldImpl() = default;

  virtual FieldKind kind() const noexcept = 0;
  /// No range checks; callers go through VelocityField::eval.
  virtual Vec evaluate(double t, const TorusPoint& x) const = 0;
  virtual double delta() const noexcept { return 0.0; }
  virtual const FlowFunction* exact_flow() const noexcept { return nullptr; }

  void check_time(double t) const;
  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  const FieldMetadata& metadata() const noexcept { return meta_; }

 protected:
  std::string name_;
  int dim_;
  FieldMetadata meta_;
};

}  // namespace lagflow::detail

#pragma once

// Identification of polynomial vector fields from snapshot data by lifting
// the dynamics to the Koopman operator: least-squares estimation of the
// projected operator, principal matrix logarithm to the projected generator,
// and least-squares recovery of the vector-field coefficients.

#include "koopid/basis.hpp"
#include "koopid/dynamics.hpp"
#include "koopid/edmd.hpp"
#include "koopid/errors.hpp"
#include "koopid/generator.hpp"
#include "koopid/identify.hpp"
#include "koopid/linalg.hpp"
#include "koopid/metrics.hpp"
#include "koopid/types.hpp"
#include "koopid/vector_field.hpp"

namespace koopid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace koopid

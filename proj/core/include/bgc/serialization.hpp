#pragma once

#include <iosfwd>
#include <string>

#include "bgc/barrier_analysis.hpp"
#include "bgc/ensemble_io.hpp"
#include "bgc/psi.hpp"

namespace bgc {

/// 17 significant digits, locale independent; non-finite values become "nan".
std::string format_double(double value);

std::string to_json(const PsiSpec& spec);
std::string to_json(const ConvexityReport& report);
std::string to_json(const BarrierFit& fit);
std::string to_json(const BandReport& report);
std::string to_json(const EnsembleSummary& summary);
std::string to_json(const ContainmentReport& report);

/// `t,x,psi[,force]`, one row per grid node.
void write_field_csv(const FieldGrid& grid, std::ostream& out);
/// `t,lower,upper`.
void write_envelope_csv(const Envelope& envelope, std::ostream& out);

}  // namespace bgc

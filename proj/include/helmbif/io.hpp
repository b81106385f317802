#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "helmbif/bifurcation.hpp"
#include "helmbif/continuation.hpp"
#include "helmbif/pruefer.hpp"
#include "helmbif/radial_core.hpp"

namespace helmbif::io {

using Json = nlohmann::json;

/// Shortest decimal form that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);
double parse_double(const std::string& s);

/// CSV with header "r,w,dw".
void write_profile_csv(std::ostream& os, const RadialProfile& p);
/// Inverse of write_profile_csv.  Nodes equal to an exact linspace read back
/// as a uniform grid.
RadialProfile read_profile_csv(std::istream& is);

Json to_json(const RadialGrid& g);
RadialGrid grid_from_json(const Json& j);
Json to_json(const RadialProfile& p);
RadialProfile profile_from_json(const Json& j);

Json to_json(const FarField& f);
FarField farfield_from_json(const Json& j);

Json to_json(const BifurcationPoint& p, bool with_profiles = true);
BifurcationPoint bifurcation_point_from_json(const Json& j);

Json to_json(const SpectralReport& r);

/// CSV with header "k,omega,b_k,residual".
void write_ladder_csv(std::ostream& os, const std::vector<BifurcationPoint>& points);

/// CSV with header "arclength,b,w_norm,v_norm,v_phase,residual".
void write_branch_csv(std::ostream& os, const Branch& br);
/// Summary rows plus the states of every `stride`-th point (and the last);
/// stride 0 omits profiles.
Json to_json(const Branch& br, int stride = 0);
/// Whitespace separated "b v_norm" columns with a comment header, for gnuplot.
void write_diagram(std::ostream& os, const Branch& br);

}  // namespace helmbif::io

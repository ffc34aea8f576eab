#ifndef HJ_IO_HPP
#define HJ_IO_HPP

#include <string>

#include "json.hpp"

#include "hj/contactflow.hpp"
#include "hj/grid.hpp"
#include "hj/semigroup.hpp"
#include "hj/stationary.hpp"

namespace hj {

/** Round all numbers in a JSON tree to 12 significant digits, in place. */
void canonicalize_numbers(nlohmann::json& j);

/** Sorted keys, 12-significant-digit floats, trailing newline; byte-deterministic. */
void write_report(const std::string& path, nlohmann::json j);

nlohmann::json to_json(const EvolveReport& rep);
nlohmann::json to_json(const C0Estimate& est);
nlohmann::json to_json(const FixedPointReport& rep);

/** Columns t,x,u,p,H. */
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/** Static line plot of a grid function, axis-labeled. */
void write_svg(const std::string& path, const GridFunction& f, const std::string& title);

}  // namespace hj

#endif

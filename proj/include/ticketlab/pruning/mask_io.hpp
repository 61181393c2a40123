#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ticketlab/pruning/mask.hpp"

namespace ticketlab::pruning {

// Text layout, per representative tensor:
//   <path> <n> <p>
//   <n characters of 0/1>

void write_mask(std::ostream& out, const PruneMask& mask);
PruneMask read_mask(std::istream& in);

void save_mask(const std::filesystem::path& path, const PruneMask& mask);
PruneMask load_mask(const std::filesystem::path& path);

}  // namespace ticketlab::pruning

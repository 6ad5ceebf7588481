#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Lexicons and prompt templates compiled in from data/.
namespace claimcheck::resources {

std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> names();

// Throws Error(Io) when the resource is not compiled in.
std::string_view get(std::string_view name);

// Non-empty, non-comment lines of a lexicon file.
std::vector<std::string> lexicon_lines(std::string_view name);

}  // namespace claimcheck::resources

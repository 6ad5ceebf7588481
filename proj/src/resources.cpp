#include "claimcheck/resources.hpp"

#include "claimcheck/error.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::resources {

std::string_view get(std::string_view name) {
  auto found = find(name);
  if (!found) throw Error(ErrorCode::Io, "resource not compiled in: " + std::string(name));
  return *found;
}

std::vector<std::string> lexicon_lines(std::string_view name) {
  std::string_view data = get(name);
  std::vector<std::string> out;
  while (!data.empty()) {
    auto nl = data.find('\n');
    std::string_view line = data.substr(0, nl);
    data = nl == std::string_view::npos ? std::string_view{} : data.substr(nl + 1);
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.emplace_back(line);
  }
  return out;
}

}  // namespace claimcheck::resources

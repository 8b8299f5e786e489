#pragma once

#include <cstdint>
#include <string>

namespace sdekit {

// One headline as ingested from a news feed.  `timestamp` is seconds since
// the Unix epoch (UTC); `symbol` is the ticker the item was tagged with.
struct NewsItem {
  std::int64_t timestamp = 0;
  std::string source;
  std::string headline;
  std::string summary;
  std::string symbol;

  bool operator==(const NewsItem&) const = default;
};

}  // namespace sdekit

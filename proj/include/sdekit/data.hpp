#pragma once

// Ingestion: daily price CSVs and news-item JSON, with diagnostics that name
// the file, line, or item index for every malformed input.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/date.hpp"
#include "sdekit/news.hpp"

namespace sdekit {

struct PricePath {
    std::vector<Date> dates;
    std::vector<double> closes;

    [[nodiscard]] std::size_t size() const { return dates.size(); }
    [[nodiscard]] bool empty() const { return dates.empty(); }
};

namespace detail {

inline std::string trim_field(std::string s) {
    auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::string lower_field(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_close(const std::string& text) {
    std::string t = trim_field(text);
    if (t.empty()) throw std::invalid_argument("empty close field");
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(t, &consumed);
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed close value \"" + t + "\"");
    }
    if (consumed != t.size())
        throw std::invalid_argument("malformed close value \"" + t + "\"");
    return value;
}

}  // namespace detail

// CSV with a `date,close` header; extra columns (OHLCV etc.) are tolerated and
// column order is taken from the header. Dates must be strictly ascending.
inline PricePath load_prices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open price file");
    auto fail = [&](int line_no, const std::string& what) -> std::runtime_error {
        return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    std::string line;
    if (!std::getline(in, line)) throw fail(1, "missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    std::size_t date_col = header.size();
    std::size_t close_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = detail::lower_field(detail::trim_field(header[i]));
        if (name == "date") date_col = i;
        if (name == "close") close_col = i;
    }
    if (date_col == header.size() || close_col == header.size())
        throw fail(1, "header must name both `date` and `close` columns");

    PricePath out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim_field(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() <= std::max(date_col, close_col))
            throw fail(line_no, "expected at least " +
                                    std::to_string(std::max(date_col, close_col) + 1) +
                                    " columns");
        Date date{};
        try {
            date = parse_date(detail::trim_field(fields[date_col]));
        } catch (const std::exception& e) {
            throw fail(line_no, e.what());
        }
        double close = 0.0;
        try {
            close = detail::parse_close(fields[close_col]);
        } catch (const std::exception& e) {
            throw fail(line_no, e.what());
        }
        if (!(close > 0.0))
            throw fail(line_no, "non-positive close price " + detail::trim_field(fields[close_col]));
        if (!out.dates.empty()) {
            if (date.serial() == out.dates.back().serial())
                throw fail(line_no, "duplicate date " + date.to_string());
            if (date.serial() < out.dates.back().serial())
                throw fail(line_no, "dates not in ascending order at " + date.to_string());
        }
        out.dates.push_back(date);
        out.closes.push_back(close);
    }
    return out;
}

// News indexed by (symbol, calendar date); range queries come back sorted by
// timestamp. A symbol may map to related symbols whose items can be merged in.
class NewsStore {
public:
    static Date date_of(std::int64_t timestamp_utc) {
        std::int64_t days = timestamp_utc >= 0 ? timestamp_utc / 86400
                                               : (timestamp_utc - 86399) / 86400;
        return Date::from_serial(static_cast<int>(days));
    }

    void add(NewsItem item) {
        if (item.symbol.empty()) throw std::invalid_argument("news item needs a symbol");
        int serial = date_of(item.timestamp).serial();
        items_[{item.symbol, serial}].push_back(std::move(item));
        ++count_;
    }

    void set_related(const std::string& symbol, std::vector<std::string> related) {
        related_[symbol] = std::move(related);
    }

    [[nodiscard]] const std::vector<std::string>& related(const std::string& symbol) const {
        static const std::vector<std::string> none;
        auto it = related_.find(symbol);
        return it == related_.end() ? none : it->second;
    }

    // Items for `symbol` dated within [from, to], ascending by timestamp.
    [[nodiscard]] std::vector<NewsItem> query(const std::string& symbol, Date from,
                                              Date to) const {
        std::vector<NewsItem> out;
        collect(symbol, from, to, out);
        sort_by_time(out);
        return out;
    }

    // Same, but merged with every related symbol's items.
    [[nodiscard]] std::vector<NewsItem> query_with_related(const std::string& symbol,
                                                           Date from, Date to) const {
        std::vector<NewsItem> out;
        collect(symbol, from, to, out);
        for (const auto& rel : related(symbol)) collect(rel, from, to, out);
        sort_by_time(out);
        return out;
    }

    [[nodiscard]] std::size_t size() const { return count_; }
    [[nodiscard]] bool empty() const { return count_ == 0; }

private:
    void collect(const std::string& symbol, Date from, Date to,
                 std::vector<NewsItem>& out) const {
        for (int serial = from.serial(); serial <= to.serial(); ++serial) {
            auto it = items_.find({symbol, serial});
            if (it == items_.end()) continue;
            out.insert(out.end(), it->second.begin(), it->second.end());
        }
    }

    static void sort_by_time(std::vector<NewsItem>& items) {
        std::stable_sort(items.begin(), items.end(),
                         [](const NewsItem& a, const NewsItem& b) {
                             return a.timestamp < b.timestamp;
                         });
    }

    std::map<std::pair<std::string, int>, std::vector<NewsItem>> items_;
    std::map<std::string, std::vector<std::string>> related_;
    std::size_t count_ = 0;
};

namespace detail {

inline std::string news_field_string(const nlohmann::json& item, std::size_t index,
                                     const char* field) {
    if (!item.contains(field) || !item[field].is_string())
        throw std::runtime_error("item " + std::to_string(index) +
                                 ": missing or invalid field '" + field + "'");
    return item[field].get<std::string>();
}

}  // namespace detail

// JSON array of news items, or an object {"items": [...], "related": {...}}.
inline NewsStore load_news(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open news file");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw std::runtime_error(path.string() + ": malformed JSON");

    NewsStore store;
    const nlohmann::json* items = &doc;
    if (doc.is_object()) {
        for (const auto& [key, value] : doc.items()) {
            if (key != "items" && key != "related")
                throw std::runtime_error(path.string() + ": unknown key \"" + key + "\"");
        }
        if (!doc.contains("items") || !doc["items"].is_array())
            throw std::runtime_error(path.string() + ": object form needs an `items` array");
        items = &doc["items"];
        if (doc.contains("related")) {
            if (!doc["related"].is_object())
                throw std::runtime_error(path.string() + ": `related` must map symbols to arrays");
            for (const auto& [symbol, list] : doc["related"].items())
                store.set_related(symbol, list.get<std::vector<std::string>>());
        }
    } else if (!doc.is_array()) {
        throw std::runtime_error(path.string() + ": news file must be a JSON array");
    }

    try {
        for (std::size_t i = 0; i < items->size(); ++i) {
            const auto& j = (*items)[i];
            if (!j.is_object())
                throw std::runtime_error("item " + std::to_string(i) + ": not an object");
            NewsItem item;
            if (!j.contains("timestamp") || !j["timestamp"].is_number_integer())
                throw std::runtime_error("item " + std::to_string(i) +
                                         ": missing or invalid field 'timestamp'");
            item.timestamp = j["timestamp"].get<std::int64_t>();
            item.source = detail::news_field_string(j, i, "source");
            item.headline = detail::news_field_string(j, i, "headline");
            item.summary = detail::news_field_string(j, i, "summary");
            item.symbol = detail::news_field_string(j, i, "symbol");
            if (item.symbol.empty())
                throw std::runtime_error("item " + std::to_string(i) + ": empty symbol");
            store.add(std::move(item));
        }
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return store;
}

}  // namespace sdekit

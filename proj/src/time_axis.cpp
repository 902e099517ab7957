#include "tsinterp/time_axis.hpp"

#include <cstdio>

namespace tsinterp {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

bool parse_time(std::string_view text, TimePoint& out) {
  using namespace std::chrono;
  int y = 0, m = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return false;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) return false;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  int hh = 0, mm = 0, ss = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') return false;
    if (text.size() != 16 && text.size() != 19) return false;
    if (text[13] != ':' || !read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mm)) return false;
    if (text.size() == 19 && (text[16] != ':' || !read_int(text, 17, 2, ss))) return false;
    if (hh > 23 || mm > 59 || ss > 59) return false;
  }
  out = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return true;
}

std::string format_time(TimePoint t, bool with_time) {
  using namespace std::chrono;
  const sys_days day_part = floor<days>(t);
  const year_month_day ymd{day_part};
  char buf[32];
  if (!with_time) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  } else {
    const auto rem = t - day_part;
    const auto h = duration_cast<hours>(rem);
    const auto m = duration_cast<minutes>(rem - h);
    const auto s = duration_cast<seconds>(rem - h - m);
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(m.count()),
                  static_cast<int>(s.count()));
  }
  return buf;
}

bool is_midnight(TimePoint t) {
  using namespace std::chrono;
  return t == floor<days>(t);
}

}  // namespace tsinterp

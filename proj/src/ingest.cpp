#include "tuition/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "tuition/error.hpp"

namespace tuition::ingest {

namespace {

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto at = line.find(delimiter, pos);
    out.emplace_back(line.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class RowReader {
 public:
  RowReader(std::string_view text, std::string_view source, const std::vector<std::string>& columns,
            char delimiter)
      : source_(source) {
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
      const auto nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      auto fields = split(line, delimiter);
      if (!header_seen) {
        header_seen = true;
        if (fields != columns) {
          std::string want;
          for (const auto& c : columns) want += (want.empty() ? "" : std::string(1, delimiter)) + c;
          fail(line_no, "header must be " + want);
          break;
        }
        continue;
      }
      if (fields.size() != columns.size()) {
        fail(line_no, "expected " + std::to_string(columns.size()) + " fields, found " +
                          std::to_string(fields.size()));
        continue;
      }
      rows_.push_back({line_no, std::move(fields)});
    }
    if (!header_seen) fail(0, "file is empty");
  }

  const std::vector<Row>& rows() const { return rows_; }
  void fail(std::size_t line, const std::string& what) {
    diagnostics_.emplace_back(line, std::string(source_) + " line " + std::to_string(line) + ": " + what);
  }
  // In line order.
  std::vector<std::string> take_diagnostics() {
    std::stable_sort(diagnostics_.begin(), diagnostics_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (auto& d : diagnostics_) out.push_back(std::move(d.second));
    diagnostics_.clear();
    return out;
  }

  std::optional<AcademicPeriod> period(const Row& r, std::size_t year_col) {
    int year = 0;
    const auto& y = r.fields[year_col];
    const auto [ptr, ec] = std::from_chars(y.data(), y.data() + y.size(), year);
    const auto sem = parse_semester(r.fields[year_col + 1]);
    if (ec != std::errc() || ptr != y.data() + y.size() || !sem) {
      fail(r.line, "bad year/semester '" + y + "/" + r.fields[year_col + 1] + "'");
      return std::nullopt;
    }
    return AcademicPeriod{year, *sem};
  }

  std::optional<std::int64_t> integer(const Row& r, std::size_t col, const char* what) {
    std::int64_t v = 0;
    const auto& s = r.fields[col];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      fail(r.line, std::string(what) + " is not an integer: '" + s + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<bool> flag(const Row& r, std::size_t col, const char* what) {
    const auto v = parse_yes_no(r.fields[col]);
    if (!v) fail(r.line, std::string(what) + " must be YES or NO: '" + r.fields[col] + "'");
    return v;
  }

  void finish() {
    if (!diagnostics_.empty()) throw ValidationError(take_diagnostics());
  }

 private:
  std::string_view source_;
  std::vector<Row> rows_;
  std::vector<std::pair<std::size_t, std::string>> diagnostics_;
};

}  // namespace

std::vector<ledger::StudentEnrollment> parse_students(std::string_view text, std::string_view source,
                                                      char delimiter) {
  RowReader in(text, source, kStudentColumns, delimiter);
  std::vector<ledger::StudentEnrollment> out;
  for (const auto& r : in.rows()) {
    const auto period = in.period(r, 0);
    const auto pay = in.flag(r, 3, "pay_credits");
    const auto degree = parse_degree(r.fields[6]);
    if (!degree) in.fail(r.line, "degree_level must be S1, S2 or S3: '" + r.fields[6] + "'");
    const auto dispensation = in.flag(r, 7, "dispensation");
    std::optional<std::int64_t> credits;
    if (!r.fields[4].empty()) credits = in.integer(r, 4, "bill1_credits");
    if (!period || !pay || !degree || !dispensation || (!r.fields[4].empty() && !credits)) continue;
    ledger::StudentEnrollment s;
    s.period = *period;
    s.student_id = r.fields[2];
    s.pay_credits = *pay;
    s.bill1_credits = credits ? static_cast<int>(*credits) : ledger::default_bill1_credits(*degree);
    s.name = r.fields[5];
    s.degree_level = *degree;
    s.dispensation = *dispensation;
    out.push_back(std::move(s));
  }
  in.finish();
  return out;
}

std::vector<ledger::CourseRegistration> parse_registrations(std::string_view text, std::string_view source,
                                                            char delimiter) {
  RowReader in(text, source, kRegistrationColumns, delimiter);
  std::vector<ledger::CourseRegistration> out;
  for (const auto& r : in.rows()) {
    const auto period = in.period(r, 0);
    const auto credits = in.integer(r, 5, "credits");
    const auto lab = in.flag(r, 6, "status_lab");
    const auto studio = in.flag(r, 7, "status_studio");
    const auto assist = in.flag(r, 8, "status_asist");
    const auto tutor = in.flag(r, 9, "status_tutor");
    const auto at = parse_datetime(r.fields[10]);
    if (!at) in.fail(r.line, "trans_datetime is not YYYYMMDDHHMMSS: '" + r.fields[10] + "'");
    if (!period || !credits || !lab || !studio || !assist || !tutor || !at) continue;
    ledger::CourseRegistration c;
    c.period = *period;
    c.student_id = r.fields[2];
    c.name = r.fields[3];
    c.course_code = r.fields[4];
    c.credits = static_cast<int>(*credits);
    c.status_lab = *lab;
    c.status_studio = *studio;
    c.status_assist = *assist;
    c.status_tutor = *tutor;
    c.trans_datetime = *at;
    out.push_back(std::move(c));
  }
  in.finish();
  return out;
}

std::vector<ledger::Scholarship> parse_scholarships(std::string_view text, std::string_view source,
                                                    char delimiter) {
  RowReader in(text, source, kScholarshipColumns, delimiter);
  std::vector<ledger::Scholarship> out;
  for (const auto& r : in.rows()) {
    const auto period = in.period(r, 0);
    const auto amount = in.integer(r, 5, "amount");
    if (!period || !amount) continue;
    out.push_back({*period, r.fields[2], r.fields[3], r.fields[4], Idr{*amount}});
  }
  in.finish();
  return out;
}

std::vector<ledger::TariffBook> parse_tariffs(std::string_view general_text, std::string_view course_text,
                                              char delimiter) {
  std::map<AcademicPeriod, ledger::TariffBook> books;
  std::vector<std::string> diagnostics;
  auto book_for = [&](const AcademicPeriod& p) -> ledger::TariffBook& {
    auto& b = books[p];
    b.period = p;
    return b;
  };

  RowReader general(general_text, "general tariffs", kGeneralTariffColumns, delimiter);
  for (const auto& r : general.rows()) {
    const auto period = general.period(r, 0);
    const auto id = parse_tariff_id(r.fields[2]);
    if (!id) general.fail(r.line, "unknown tariff_ID '" + r.fields[2] + "'");
    const auto amount = general.integer(r, 4, "amount");
    if (amount && *amount < 0) general.fail(r.line, "negative amount");
    if (!period || !id || !amount || *amount < 0) continue;
    auto& book = book_for(*period);
    if (!book.general.emplace(*id, ledger::GeneralTariff{r.fields[3], Idr{*amount}}).second) {
      general.fail(r.line, "duplicate " + r.fields[2] + " for " + to_string(*period));
    }
  }
  diagnostics = general.take_diagnostics();

  if (!course_text.empty()) {
    RowReader course(course_text, "course tariffs", kCourseTariffColumns, delimiter);
    for (const auto& r : course.rows()) {
      const auto period = course.period(r, 0);
      if (r.fields[2].empty()) course.fail(r.line, "empty course_code");
      ledger::CourseTariff ct;
      ct.course_code = r.fields[2];
      bool ok = period.has_value() && !r.fields[2].empty();
      std::optional<ledger::FeeItem>* slots[] = {&ct.lab, &ct.studio, &ct.assist, &ct.tutor};
      for (std::size_t k = 0; k < 4; ++k) {
        const auto& code = r.fields[3 + 2 * k];
        const auto& amount_text = r.fields[4 + 2 * k];
        if (code.empty() && amount_text.empty()) continue;
        if (code.empty()) {
          course.fail(r.line, "fee amount without a fee code");
          ok = false;
          continue;
        }
        const auto amount = course.integer(r, 4 + 2 * k, "fee amount");
        if (!amount || *amount < 0) {
          if (amount) course.fail(r.line, "negative fee amount");
          ok = false;
          continue;
        }
        *slots[k] = ledger::FeeItem{code, Idr{*amount}};
      }
      if (!ok) continue;
      auto& book = book_for(*period);
      if (!book.course.emplace(ct.course_code, ct).second) {
        course.fail(r.line, "duplicate course " + ct.course_code + " for " + to_string(*period));
      }
    }
    for (auto& d : course.take_diagnostics()) diagnostics.push_back(std::move(d));
  }
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));

  std::vector<ledger::TariffBook> out;
  for (auto& [p, b] : books) out.push_back(std::move(b));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tuition::ingest

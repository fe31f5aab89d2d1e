#pragma once

// Brute-force re-derivation of bill amounts from raw academic data. Works on
// plain integers and looks tariffs up by name so it shares no arithmetic
// with the library.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tuition/ledger.hpp"

namespace oracle {

struct Expected {
  std::int64_t bill1 = 0;
  std::int64_t total = 0;
  std::int64_t bill2 = 0;
  bool bill2_prepaid = false;
  std::int64_t bill_ss = 0;
};

inline std::int64_t general_by_name(const tuition::ledger::TariffBook& book, const std::string& name) {
  for (const auto& [id, t] : book.general) {
    if (std::string(tuition::to_string(id)) == name) return t.amount.value();
  }
  throw std::runtime_error("oracle: missing tariff " + name);
}

inline std::string level_name(tuition::DegreeLevel l) {
  switch (l) {
    case tuition::DegreeLevel::S1: return "S1";
    case tuition::DegreeLevel::S2: return "S2";
    case tuition::DegreeLevel::S3: return "S3";
  }
  return "?";
}

inline Expected expected_bills(const tuition::ledger::StudentEnrollment& s,
                               const std::vector<tuition::ledger::CourseRegistration>& regs,
                               const std::vector<tuition::ledger::Scholarship>& scholarships,
                               const tuition::ledger::TariffBook& book) {
  const std::string lvl = level_name(s.degree_level);
  const std::int64_t registration = general_by_name(book, "REGISTRATION_" + lvl);
  Expected e;
  e.bill1 = registration;
  if (s.pay_credits) {
    const std::int64_t credit = general_by_name(book, "CREDIT_" + lvl);
    for (int i = 0; i < s.bill1_credits; ++i) e.bill1 += credit;
  }

  std::int64_t total = registration;
  for (const auto& r : regs) {
    const std::int64_t credit = general_by_name(book, "CREDIT_" + lvl);
    for (int c = 0; c < r.credits; ++c) total += credit;
    const auto& fees = book.course.at(r.course_code);
    if (r.status_lab) total += fees.lab.value().amount.value();
    if (r.status_studio) total += fees.studio.value().amount.value();
    if (r.status_assist) total += fees.assist.value().amount.value();
    if (r.status_tutor) total += fees.tutor.value().amount.value();
  }
  e.total = total;

  std::int64_t remainder = total - e.bill1;
  for (const auto& sch : scholarships) remainder -= sch.amount.value();
  e.bill2 = remainder > 0 ? remainder : 0;
  e.bill2_prepaid = e.bill2 == 0;
  e.bill_ss = total;
  return e;
}

inline std::int64_t flat_or_percent_fine(std::int64_t bill, bool percent, std::int64_t flat, std::int64_t bp) {
  if (!percent) return flat;
  // Half-up by comparing twice the remainder with the divisor.
  const std::int64_t num = bill * bp;
  std::int64_t q = num / 10'000;
  if ((num % 10'000) * 2 >= 10'000) ++q;
  return q;
}

inline std::int64_t due_bill_sum(const std::vector<tuition::ledger::Bill>& unpaid) {
  std::int64_t sum = 0;
  for (const auto& b : unpaid) sum += b.amount.value();
  return sum;
}

}  // namespace oracle

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tuition/store.hpp"
#include "tuition/vas_ledger.hpp"

namespace tuition::reports {

struct Filter {
  std::optional<std::string> student_id;
  std::optional<AcademicPeriod> period;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Delimited text with a header row. Fields holding the delimiter or a
  // quote are quoted.
  std::string to_text(char delimiter = ',') const;
};

// Tstd_bill rows ordered by (student, period, paycode, generation). With
// include_superseded, generation and superseded columns are appended.
Table bill_report(const store::TableSet& tables, const Filter& filter = {}, bool include_superseded = false);
// Every PAYMENT, plus a REVERSAL row for each reversed payment, in time order.
Table transaction_report(const store::TableSet& tables, const Filter& filter = {});
// Payments that still stand.
Table payment_report(const store::TableSet& tables, const Filter& filter = {});

struct Discrepancy {
  std::string student_id;
  std::string bank_code;
  std::string transaction_no;
  Paycode paycode = Paycode::Bill1;
  Idr amount;
};

struct BalanceReport {
  std::optional<AcademicPeriod> period;
  std::size_t payments = 0;
  std::size_t reversals = 0;
  Idr total_payments;     // standing payments
  Idr total_billed_paid;  // paid, live bills
  Idr delta;              // total_payments - total_billed_paid
  bool has_vas = false;
  Idr vas_total;  // money the bank holds
  Idr vas_delta;  // vas_total - every standing payment
  std::vector<Discrepancy> orphans;  // bank holds money the engine never booked
  std::vector<Discrepancy> ghosts;   // engine booked money the bank does not hold

  bool balanced() const { return delta.is_zero() && (!has_vas || (orphans.empty() && ghosts.empty())); }
  std::string summary() const;
};

BalanceReport balance_check(const store::TableSet& tables, std::optional<AcademicPeriod> period = {},
                            const sim::VasLedger* vas = nullptr);

}  // namespace tuition::reports

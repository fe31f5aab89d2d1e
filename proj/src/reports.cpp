#include "tuition/reports.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace tuition::reports {

namespace {

std::string quote_if_needed(const std::string& field, char delimiter) {
  if (field.find(delimiter) == std::string::npos && field.find('"') == std::string::npos &&
      field.find('\n') == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

bool matches(const Filter& f, const std::string& student, const AcademicPeriod& period) {
  return (!f.student_id || *f.student_id == student) && (!f.period || *f.period == period);
}

std::string name_of(const store::TableSet& t, const std::string& student, const AcademicPeriod& period) {
  if (const auto it = t.student_active.find({period, student}); it != t.student_active.end()) {
    return it->second.name;
  }
  for (const auto& [key, s] : t.student_active) {
    if (key.second == student) return s.name;
  }
  return "";
}

}  // namespace

std::string Table::to_text(char delimiter) const {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += delimiter;
      out += quote_if_needed(fields[i], delimiter);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

Table bill_report(const store::TableSet& tables, const Filter& filter, bool include_superseded) {
  std::vector<ledger::Bill> bills;
  for (const auto& bill : tables.all_bills()) {
    if (!include_superseded && bill.superseded) continue;
    if (matches(filter, bill.student_id, bill.period)) bills.push_back(bill);
  }
  std::sort(bills.begin(), bills.end(), [](const ledger::Bill& a, const ledger::Bill& b) {
    return std::tie(a.student_id, a.period, a.paycode, a.generation) <
           std::tie(b.student_id, b.period, b.paycode, b.generation);
  });
  Table t;
  t.header = {"year",   "semester",          "student_ID",  "name",         "paycode",
              "amount", "generate_datetime", "paid_status", "datetime_paid"};
  if (include_superseded) {
    t.header.push_back("generation");
    t.header.push_back("superseded");
  }
  for (const auto& b : bills) {
    std::vector<std::string> row = {std::to_string(b.period.year),
                                    std::string(semester_code(b.period.semester)),
                                    b.student_id,
                                    name_of(tables, b.student_id, b.period),
                                    std::string(to_string(b.paycode)),
                                    b.amount.to_string(),
                                    format_datetime(b.generate_datetime),
                                    std::string(yes_no(b.paid_status)),
                                    b.datetime_paid ? format_datetime(*b.datetime_paid) : ""};
    if (include_superseded) {
      row.push_back(std::to_string(b.generation));
      row.emplace_back(yes_no(b.superseded));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table transaction_report(const store::TableSet& tables, const Filter& filter) {
  struct Event {
    Timestamp at;
    std::size_t record;
    int kind;
  };
  std::vector<Event> events;
  for (std::size_t i = 0; i < tables.payment_trans.size(); ++i) {
    const auto& r = tables.payment_trans[i];
    if (!matches(filter, r.payment.student_id, r.bill_period)) continue;
    events.push_back({r.recorded_at, i, 0});
    if (r.reversed && r.reversal) events.push_back({r.reversed_at.value_or(r.recorded_at), i, 1});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.at, a.record, a.kind) < std::tie(b.at, b.record, b.kind);
  });
  Table t;
  t.header = {"transaction_type", "student_ID", "paycode", "amount", "CCY_code"};
  for (const auto& e : events) {
    const auto& r = tables.payment_trans[e.record];
    const auto& m = e.kind == 0 ? r.payment : *r.reversal;
    t.rows.push_back({std::string(to_string(m.transaction_type)), m.student_id,
                      std::string(to_string(m.paycode)), m.amount.to_string(), m.ccy_code});
  }
  return t;
}

Table payment_report(const store::TableSet& tables, const Filter& filter) {
  Table t;
  t.header = {"student_ID", "name", "paycode", "amount", "trans_datetime"};
  for (const auto& r : tables.payment_trans) {
    if (r.reversed || !matches(filter, r.payment.student_id, r.bill_period)) continue;
    const auto& p = r.payment;
    t.rows.push_back({p.student_id, name_of(tables, p.student_id, r.bill_period),
                      std::string(to_string(p.paycode)), p.amount.to_string(), format_datetime(p.trans_datetime)});
  }
  return t;
}

BalanceReport balance_check(const store::TableSet& tables, std::optional<AcademicPeriod> period,
                            const sim::VasLedger* vas) {
  BalanceReport rep;
  rep.period = period;
  for (const auto& [student, account] : tables.std_bill) {
    for (const auto& b : account.bills) {
      if (b.paid_status && !b.superseded && !b.amount.is_zero() && (!period || b.period == *period)) {
        rep.total_billed_paid += b.amount;
      }
    }
  }
  // (bank, transaction) -> standing payment, for matching against the bank.
  std::map<std::pair<std::string, std::string>, const protocol::PaymentMessage*> standing;
  for (const auto& r : tables.payment_trans) {
    if (r.reversed) {
      if (!period || r.bill_period == *period) ++rep.reversals;
      continue;
    }
    standing[{r.payment.bank_code, r.payment.transaction_no}] = &r.payment;
    if (period && r.bill_period != *period) continue;
    ++rep.payments;
    rep.total_payments += r.payment.amount;
  }
  rep.delta = rep.total_payments - rep.total_billed_paid;

  if (vas) {
    rep.has_vas = true;
    std::map<std::pair<std::string, std::string>, const sim::VasEntry*> held;
    for (const auto& e : vas->entries()) {
      if (!e.settled()) continue;
      held[{e.bank_code, e.transaction_no}] = &e;
      rep.vas_total += e.amount;
      const auto it = standing.find({e.bank_code, e.transaction_no});
      if (it == standing.end() || it->second->amount != e.amount) {
        rep.orphans.push_back({e.student_id, e.bank_code, e.transaction_no, e.paycode, e.amount});
      }
    }
    for (const auto& [key, p] : standing) {
      const auto it = held.find(key);
      if (it == held.end() || it->second->amount != p->amount) {
        rep.ghosts.push_back({p->student_id, p->bank_code, p->transaction_no, p->paycode, p->amount});
      }
    }
    // Only the engine's side is period-scoped.
    Idr all_standing;
    for (const auto& [key, p] : standing) all_standing += p->amount;
    rep.vas_delta = rep.vas_total - all_standing;
  }
  return rep;
}

std::string BalanceReport::summary() const {
  std::string out;
  out += "period=" + (period ? to_string(*period) : std::string("ALL")) + "\n";
  out += "payments=" + std::to_string(payments) + "\n";
  out += "reversals=" + std::to_string(reversals) + "\n";
  out += "total_payments=" + total_payments.to_string() + "\n";
  out += "total_billed_paid=" + total_billed_paid.to_string() + "\n";
  out += "delta=" + delta.to_string() + "\n";
  if (has_vas) {
    out += "vas_total=" + vas_total.to_string() + "\n";
    out += "vas_delta=" + vas_delta.to_string() + "\n";
    out += "orphans=" + std::to_string(orphans.size()) + "\n";
    for (const auto& d : orphans) {
      out += "  orphan " + d.bank_code + " " + d.transaction_no + " " + d.student_id + " " +
             std::string(to_string(d.paycode)) + " " + d.amount.to_string() + "\n";
    }
    out += "ghosts=" + std::to_string(ghosts.size()) + "\n";
    for (const auto& d : ghosts) {
      out += "  ghost " + d.bank_code + " " + d.transaction_no + " " + d.student_id + " " +
             std::string(to_string(d.paycode)) + " " + d.amount.to_string() + "\n";
    }
  }
  out += std::string("status=") + (balanced() ? "BALANCED" : "UNBALANCED") + "\n";
  return out;
}

}  // namespace tuition::reports

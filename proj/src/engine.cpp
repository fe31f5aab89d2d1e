#include "tuition/engine.hpp"

#include <algorithm>
#include <functional>

#include "tuition/error.hpp"

namespace tuition::ups {

std::string_view to_string(EngineState state) {
  switch (state) {
    case EngineState::Initializing: return "INITIALIZING";
    case EngineState::Ready: return "READY";
    case EngineState::ComputingBills: return "COMPUTING_BILLS";
    case EngineState::GeneratingReports: return "GENERATING_REPORTS";
  }
  return "";
}

Engine::Engine(store::Store& store, const Clock& clock) : store_(store), clock_(clock) {}

void Engine::start() {
  std::lock_guard lock(state_mutex_);
  if (state_ != EngineState::Initializing) {
    throw Error(ErrorCode::InvalidTransition, "engine already started");
  }
  state_ = EngineState::Ready;
}

EngineState Engine::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

void Engine::require_started() const {
  if (state() == EngineState::Initializing) {
    throw Error(ErrorCode::EngineNotReady, "engine is still initializing");
  }
}

std::mutex& Engine::student_lock(const std::string& student_id) {
  return student_locks_[std::hash<std::string>{}(student_id) % student_locks_.size()];
}

Engine::ReportScope::ReportScope(Engine& engine) : engine_(engine) {
  std::lock_guard lock(engine_.state_mutex_);
  if (engine_.state_ == EngineState::Initializing) {
    throw Error(ErrorCode::EngineNotReady, "engine is still initializing");
  }
  if (engine_.active_reports_++ == 0 && engine_.state_ == EngineState::Ready) {
    engine_.state_ = EngineState::GeneratingReports;
  }
}

Engine::ReportScope::~ReportScope() {
  std::lock_guard lock(engine_.state_mutex_);
  if (--engine_.active_reports_ == 0 && engine_.state_ == EngineState::GeneratingReports) {
    engine_.state_ = EngineState::Ready;
  }
}

// --- bank-facing --------------------------------------------------------------

protocol::BillResponse Engine::handle_bill_request(const protocol::BillRequest& request) {
  require_started();
  const bool known = store_.is_known_student(request.student_id);
  const auto unpaid = known ? store_.get_unpaid_bills(request.student_id) : std::vector<ledger::Bill>{};
  return protocol::build_bill_response(request.student_id, unpaid, known);
}

PaymentStatus Engine::handle_payment(const protocol::PaymentMessage& p) {
  require_started();
  if (p.transaction_type != TransactionType::Payment) {
    throw Error(ErrorCode::InvalidArgument, "handle_payment needs a PAYMENT message");
  }
  const std::string txkey = store::transaction_key(p.bank_code, p.transaction_no);
  std::lock_guard guard(student_lock(p.student_id));

  const auto view = store_.account_view(p.student_id, txkey);
  if (view.payment && !view.payment->reversed) return PaymentStatus::Success;
  {
    std::lock_guard memo(memo_mutex_);
    const auto it = refused_memo_.find(txkey);
    if (it != refused_memo_.end() && it->second.first == p.student_id) return it->second.second;
  }

  auto refuse = [&](PaymentStatus status) {
    std::lock_guard memo(memo_mutex_);
    refused_memo_[txkey] = {p.student_id, status};
    return status;
  };

  if (!store_.is_known_student(p.student_id)) return refuse(PaymentStatus::WrongAccount);

  const ledger::Bill* match = nullptr;
  bool any_outstanding = false;
  for (const auto& bill : view.bills) {
    if (!bill.outstanding()) continue;
    any_outstanding = true;
    if (bill.paycode == p.paycode && bill.amount == p.amount && (!match || bill.period < match->period)) {
      match = &bill;
    }
  }
  if (!any_outstanding) return refuse(PaymentStatus::BillIsZero);
  if (!match) return refuse(PaymentStatus::WrongAmount);

  store::PaymentRecord record;
  record.payment = p;
  record.recorded_at = clock_.now();
  record.bill_period = match->period;
  record.bill_generation = match->generation;
  store_.commit_payment(record);
  return PaymentStatus::Success;
}

ReversalStatus Engine::handle_reversal(const protocol::PaymentMessage& r) {
  require_started();
  if (r.transaction_type != TransactionType::Reversal) {
    throw Error(ErrorCode::InvalidArgument, "handle_reversal needs a REVERSAL message");
  }
  std::lock_guard guard(student_lock(r.student_id));
  return store_.commit_reversal(r, clock_.now()) ? ReversalStatus::Success : ReversalStatus::Fail;
}

// --- bill computation ------------------------------------------------------------

std::vector<std::pair<ledger::StudentEnrollment, Paycode>> Engine::expand(
    const BillComputeCommand& cmd) const {
  std::vector<std::pair<ledger::StudentEnrollment, Paycode>> out;
  for (const auto& entry : cmd.entries) {
    switch (entry.paycode) {
      case Paycode::Bill1:
      case Paycode::Bill2:
      case Paycode::BillSS:
      case Paycode::DueBill: break;
      default:
        throw Error(ErrorCode::InvalidArgument,
                    std::string(to_string(entry.paycode)) + " is not a bill computation target");
    }
    if (entry.paycode != Paycode::DueBill && !store_.tariff_book(entry.period)) {
      throw Error(ErrorCode::MissingTariff, "no tariff book for " + to_string(entry.period));
    }
    if (entry.student) {
      auto s = store_.enrollment(entry.period, *entry.student);
      if (!s) {
        throw Error(ErrorCode::MissingAcademicData,
                    *entry.student + " is not active in " + to_string(entry.period));
      }
      out.emplace_back(std::move(*s), entry.paycode);
    } else {
      auto students = store_.students_in(entry.period);
      if (students.empty()) {
        throw Error(ErrorCode::MissingAcademicData, "no active students in " + to_string(entry.period));
      }
      for (auto& s : students) out.emplace_back(std::move(s), entry.paycode);
    }
  }
  return out;
}

Engine::Plan Engine::plan_bill(const ledger::StudentEnrollment& student, Paycode paycode,
                               const ledger::BillStamp& stamp) const {
  Plan plan;
  plan.changes.student_id = student.student_id;
  const auto bills = store_.bills_of(student.student_id);

  const ledger::Bill* current = nullptr;
  std::uint32_t next_generation = 0;
  for (const auto& bill : bills) {
    if (bill.period != student.period || bill.paycode != paycode) continue;
    next_generation = std::max(next_generation, bill.generation + 1);
    if (!bill.superseded && (!current || bill.generation > current->generation)) current = &bill;
  }

  ledger::Bill fresh;
  if (paycode == Paycode::DueBill) {
    std::vector<ledger::Bill> sources;
    for (const auto& bill : bills) {
      if (bill.outstanding() && bill.period == student.period.previous()) sources.push_back(bill);
    }
    if (sources.empty()) return plan;
    auto rollover = ledger::roll_due_bill(sources, student.period, stamp);
    fresh = std::move(rollover.due_bill);
    plan.changes.superseded = std::move(rollover.superseded);
    if (current && current->outstanding()) {
      // Fold into the open DUE-BILL so only one stays payable.
      fresh.amount += current->amount;
      plan.changes.superseded.push_back(*current);
      plan.outcome = Plan::Outcome::Replaced;
    } else {
      plan.outcome = Plan::Outcome::Created;
    }
    fresh.generation = next_generation;
    plan.changes.inserted.push_back(std::move(fresh));
    return plan;
  }

  const auto tariffs = store_.tariff_book(student.period);
  if (!tariffs) throw Error(ErrorCode::MissingTariff, "no tariff book for " + to_string(student.period));
  switch (paycode) {
    case Paycode::Bill1: fresh = ledger::compute_bill1(student, *tariffs, stamp); break;
    case Paycode::Bill2: {
      const auto regs = store_.registrations_of(student.period, student.student_id);
      const auto scholarships = store_.scholarships_of(student.period, student.student_id);
      const Idr total = ledger::compute_total_semester_bill(student, regs, *tariffs);
      std::optional<Idr> bill1;
      std::uint32_t bill1_generation = 0;
      for (const auto& bill : bills) {
        if (bill.period == student.period && bill.paycode == Paycode::Bill1 && !bill.superseded &&
            (!bill1 || bill.generation >= bill1_generation)) {
          bill1 = bill.amount;
          bill1_generation = bill.generation;
        }
      }
      if (!bill1) bill1 = ledger::compute_bill1(student, *tariffs, stamp).amount;
      fresh = ledger::compute_bill2(student, total, *bill1, ledger::scholarship_total(scholarships), stamp);
      break;
    }
    case Paycode::BillSS: {
      const auto regs = store_.registrations_of(student.period, student.student_id);
      fresh = ledger::compute_bill3(student, regs, *tariffs, stamp);
      break;
    }
    default: throw Error(ErrorCode::InvalidArgument, "unsupported computation target");
  }

  // A zero bill that was auto-settled carries no payment, so it may be replaced.
  const bool auto_settled = current && current->paid_status && current->amount.is_zero();
  if (current && current->paid_status && !auto_settled) {
    plan.outcome = Plan::Outcome::SkippedPaid;
    return plan;
  }
  if (current && current->amount == fresh.amount) {
    plan.outcome = Plan::Outcome::Unchanged;
    return plan;
  }
  fresh.generation = next_generation;
  if (current) {
    plan.changes.superseded.push_back(*current);
    plan.outcome = Plan::Outcome::Replaced;
  } else {
    plan.outcome = Plan::Outcome::Created;
  }
  plan.changes.inserted.push_back(std::move(fresh));
  return plan;
}

ComputeSummary Engine::run_bill_computation(const BillComputeCommand& command) {
  {
    std::lock_guard lock(state_mutex_);
    if (state_ == EngineState::Initializing) {
      throw Error(ErrorCode::EngineNotReady, "engine is still initializing");
    }
    if (state_ != EngineState::Ready) {
      throw Error(ErrorCode::InvalidTransition,
                  "bill computation needs READY, engine is " + std::string(to_string(state_)));
    }
    state_ = EngineState::ComputingBills;
  }
  struct BackToReady {
    Engine& e;
    ~BackToReady() {
      std::lock_guard lock(e.state_mutex_);
      e.state_ = e.active_reports_ > 0 ? EngineState::GeneratingReports : EngineState::Ready;
    }
  } back{*this};

  const Timestamp now = clock_.now();
  const ledger::BillStamp stamp{now, command.due_date.value_or(now.plus_ms(kDefaultDueMs))};
  const auto targets = expand(command);

  // Every target is planned once before anything is written so a bad tariff
  // or registration aborts the whole command.
  for (const auto& [student, paycode] : targets) plan_bill(student, paycode, stamp);

  ComputeSummary summary;
  for (const auto& [student, paycode] : targets) {
    std::lock_guard guard(student_lock(student.student_id));
    const Plan plan = plan_bill(student, paycode, stamp);
    store_.commit_bill_changes(plan.changes);
    switch (plan.outcome) {
      case Plan::Outcome::Created: ++summary.created; break;
      case Plan::Outcome::Replaced: ++summary.replaced; break;
      case Plan::Outcome::Unchanged: ++summary.unchanged; break;
      case Plan::Outcome::SkippedPaid: ++summary.skipped_paid; break;
    }
  }
  return summary;
}

store::UpsertSummary Engine::ingest_academic_data(const store::AcademicBatch& batch) {
  return store_.upsert_academic(batch);
}

bool Engine::update_tariff(const ledger::TariffBook& book) { return store_.replace_tariffs(book); }

FineSummary Engine::assess_fines(const AcademicPeriod& period, const ledger::FinePolicy& policy) {
  require_started();
  FineSummary summary;
  const Timestamp now = clock_.now();
  for (const auto& student : store_.students_in(period)) {
    std::lock_guard guard(student_lock(student.student_id));
    std::vector<ledger::Bill> bills;
    for (auto& bill : store_.bills_of(student.student_id)) {
      if (bill.period == period) bills.push_back(std::move(bill));
    }
    auto fines = ledger::apply_fines(bills, policy, now);
    if (fines.empty()) continue;
    store::BillChangeSet changes;
    changes.student_id = student.student_id;
    for (auto& fine : fines) {
      std::uint32_t generation = 0;
      for (const auto& bill : bills) {
        if (bill.paycode == fine.paycode) generation = std::max(generation, bill.generation + 1);
      }
      fine.generation = generation;
      summary.total += fine.amount;
      ++summary.fines;
      changes.inserted.push_back(std::move(fine));
    }
    store_.commit_bill_changes(changes);
  }
  return summary;
}

ledger::Eligibility Engine::check_eligibility(const std::string& student_id,
                                              const AcademicPeriod& period,
                                              ledger::Action action) const {
  const auto enrollment = store_.enrollment(period, student_id);
  const auto bills = store_.bills_of(student_id);
  return ledger::check_eligibility(student_id, period, action, bills,
                                   enrollment && enrollment->dispensation);
}

}  // namespace tuition::ups

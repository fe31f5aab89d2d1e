#include "tuition/vas_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tuition/random.hpp"

namespace tuition::sim {

namespace {

namespace fs = std::filesystem;

// Independent random streams.
enum Stream : std::uint64_t {
  kFaultStream = 1,
  kChannelStream = 2,
  kSendStream = 10,  // + phase
  kTariffStream = 100,
  kStudentStream = 101,
  kExtraSlotStream = 200,
};

constexpr std::array<DeliveryChannel, 4> kClientChannels = {
    DeliveryChannel::Teller, DeliveryChannel::Atm, DeliveryChannel::Sms, DeliveryChannel::Ebank};

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

struct OutcomeName {
  VasOutcome outcome;
  std::string_view name;
};
constexpr std::array<OutcomeName, 7> kOutcomeNames = {{
    {VasOutcome::Pending, "PENDING"},
    {VasOutcome::Success, "SUCCESS"},
    {VasOutcome::Refused, "REFUSED"},
    {VasOutcome::Reversed, "REVERSED"},
    {VasOutcome::Cancelled, "CANCELLED"},
    {VasOutcome::ReversalLost, "REVERSAL_LOST"},
    {VasOutcome::ClearingAccepted, "CLEARING_ACCEPTED"},
}};

struct FaultName {
  FaultKind kind;
  std::string_view name;
};
constexpr std::array<FaultName, 8> kFaultNames = {{
    {FaultKind::None, "none"},
    {FaultKind::DropRequest, "drop_request"},
    {FaultKind::DropResponse, "drop_response"},
    {FaultKind::Duplicate, "duplicate"},
    {FaultKind::DropAck, "drop_ack"},
    {FaultKind::ClearingAnomaly, "clearing_anomaly"},
    {FaultKind::WrongAmount, "wrong_amount"},
    {FaultKind::WrongAccount, "wrong_account"},
}};

}  // namespace

// --- names ------------------------------------------------------------------------

std::string_view to_string(VasOutcome outcome) {
  for (const auto& n : kOutcomeNames) {
    if (n.outcome == outcome) return n.name;
  }
  return "?";
}

std::optional<VasOutcome> parse_vas_outcome(std::string_view text) {
  for (const auto& n : kOutcomeNames) {
    if (n.name == text) return n.outcome;
  }
  return std::nullopt;
}

std::string_view to_string(FaultKind kind) {
  for (const auto& n : kFaultNames) {
    if (n.kind == kind) return n.name;
  }
  return "?";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
  for (const auto& n : kFaultNames) {
    if (n.name == text) return n.kind;
  }
  return std::nullopt;
}

// --- VAS ledger -------------------------------------------------------------------

Idr VasLedger::settled_total() const {
  Idr total;
  for (const auto& e : entries_) {
    if (e.settled()) total += e.amount;
  }
  return total;
}

std::string VasLedger::to_text() const {
  std::string out = "student_id\tbank_code\ttransaction_no\tpaycode\tamount\tchannel\toutcome\n";
  for (const auto& e : entries_) {
    out += e.student_id + '\t' + e.bank_code + '\t' + e.transaction_no + '\t' +
           std::string(to_string(e.paycode)) + '\t' + e.amount.to_string() + '\t' +
           std::string(to_string(e.channel)) + '\t' + std::string(to_string(e.outcome)) + '\n';
  }
  return out;
}

VasLedger VasLedger::parse(std::string_view text) {
  VasLedger ledger;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1 || trim(line).empty()) continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    const auto paycode = f.size() == 7 ? parse_paycode(f[3]) : std::nullopt;
    const auto amount = f.size() == 7 ? parse_number<std::int64_t>(f[4]) : std::nullopt;
    const auto channel = f.size() == 7 ? parse_channel(f[5]) : std::nullopt;
    const auto outcome = f.size() == 7 ? parse_vas_outcome(f[6]) : std::nullopt;
    if (!paycode || !amount || !channel || !outcome) {
      throw Error(ErrorCode::InvalidArgument, "VAS ledger line " + std::to_string(line_no) + " is malformed");
    }
    ledger.add(VasEntry{std::string(f[0]), std::string(f[1]), std::string(f[2]), *paycode, Idr{*amount},
                        *channel, *outcome});
  }
  return ledger;
}

void VasLedger::save(const fs::path& path) const { write_file(path, to_text()); }

VasLedger VasLedger::load(const fs::path& path) { return parse(read_file(path)); }

// --- configuration ----------------------------------------------------------------

void FaultPlan::validate() const {
  const std::pair<const char*, double> rates[] = {
      {"drop_request_rate", drop_request_rate},  {"drop_response_rate", drop_response_rate},
      {"duplicate_rate", duplicate_rate},        {"drop_ack_rate", drop_ack_rate},
      {"clearing_anomaly_rate", clearing_anomaly_rate}};
  for (const auto& [name, rate] : rates) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw Error(ErrorCode::ConfigError, std::string(name) + " must be within [0, 1]");
    }
  }
}

ScenarioConfig ScenarioConfig::parse(std::string_view text) {
  ScenarioConfig c;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "faults" && section != "overrides") config_error(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(line_no, "expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    auto need = [&](auto parsed) {
      if (!parsed) config_error(line_no, "bad value for " + key + ": '" + std::string(value) + "'");
      return *parsed;
    };

    if (section == "overrides") {
      const auto index = need(parse_number<std::uint64_t>(key));
      const auto kind = need(parse_fault_kind(value));
      c.faults.overrides[index] = kind;
    } else if (section == "faults") {
      const double rate = need(parse_number<double>(value));
      if (key == "drop_request_rate") c.faults.drop_request_rate = rate;
      else if (key == "drop_response_rate") c.faults.drop_response_rate = rate;
      else if (key == "duplicate_rate") c.faults.duplicate_rate = rate;
      else if (key == "drop_ack_rate") c.faults.drop_ack_rate = rate;
      else if (key == "clearing_anomaly_rate") c.faults.clearing_anomaly_rate = rate;
      else config_error(line_no, "unknown fault '" + key + "'");
    } else if (key == "name") {
      c.name = std::string(value);
    } else if (key == "seed") {
      c.seed = need(parse_number<std::uint64_t>(value));
    } else if (key == "period") {
      c.period = need(parse_period(value));
    } else if (key == "students") {
      c.students = need(parse_number<std::size_t>(value));
    } else if (key == "paycodes") {
      c.paycodes.clear();
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const auto comma = value.find(',', pos);
        const auto item = trim(value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        c.paycodes.push_back(need(parse_paycode(item)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
    } else if (key == "attempts") {
      c.attempts = need(parse_number<std::size_t>(value));
    } else if (key == "latency_ms") {
      c.latency_ms = need(parse_number<std::int64_t>(value));
    } else if (key == "max_sends") {
      c.max_sends = need(parse_number<int>(value));
    } else if (key == "start") {
      c.start = need(parse_datetime(value));
    } else if (key == "bank_code") {
      c.bank_code = std::string(value);
    } else if (key == "institution_code") {
      c.institution_code = std::string(value);
    } else if (key == "scholarship_rate") {
      c.scholarship_rate = need(parse_number<double>(value));
    } else if (key == "population") {
      if (value == "generate") c.generate_population = true;
      else if (value == "existing") c.generate_population = false;
      else config_error(line_no, "population must be generate or existing");
    } else {
      config_error(line_no, "unknown key '" + key + "'");
    }
  }

  c.faults.validate();
  if (c.paycodes.empty()) throw Error(ErrorCode::ConfigError, "paycodes is empty");
  for (const auto p : c.paycodes) {
    const bool fits = c.period.is_short() ? p == Paycode::BillSS : (p == Paycode::Bill1 || p == Paycode::Bill2);
    if (!fits) {
      throw Error(ErrorCode::ConfigError,
                  std::string(to_string(p)) + " is not billed in " + to_string(c.period));
    }
  }
  if (c.latency_ms < 0) throw Error(ErrorCode::ConfigError, "latency_ms is negative");
  if (c.max_sends < 1 || c.max_sends > 3) throw Error(ErrorCode::ConfigError, "max_sends must be 1..3");
  if (!(c.scholarship_rate >= 0.0 && c.scholarship_rate <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "scholarship_rate must be within [0, 1]");
  }
  if (!protocol::is_wire_safe(c.bank_code) || c.bank_code.size() != 3) {
    throw Error(ErrorCode::ConfigError, "bank_code must be three wire-safe characters");
  }
  if (!protocol::is_wire_safe(c.institution_code)) {
    throw Error(ErrorCode::ConfigError, "institution_code is not wire-safe");
  }
  if (c.generate_population && (c.students == 0 || c.students > 999'999)) {
    throw Error(ErrorCode::ConfigError, "students must be 1..999999");
  }
  if (!c.period.valid()) throw Error(ErrorCode::ConfigError, "period year out of range");
  return c;
}

ScenarioConfig ScenarioConfig::load(const fs::path& path) { return parse(read_file(path)); }

std::string ScenarioConfig::to_text() const {
  std::string out;
  out += "name=" + name + "\n";
  out += "seed=" + std::to_string(seed) + "\n";
  out += "period=" + to_string(period) + "\n";
  out += "students=" + std::to_string(students) + "\n";
  out += "paycodes=";
  for (std::size_t i = 0; i < paycodes.size(); ++i) {
    if (i) out += ',';
    out += to_string(paycodes[i]);
  }
  out += "\n";
  if (attempts) out += "attempts=" + std::to_string(*attempts) + "\n";
  out += "latency_ms=" + std::to_string(latency_ms) + "\n";
  out += "max_sends=" + std::to_string(max_sends) + "\n";
  out += "start=" + format_datetime(start) + "\n";
  out += "bank_code=" + bank_code + "\n";
  out += "institution_code=" + institution_code + "\n";
  out += "scholarship_rate=" + format_double(scholarship_rate) + "\n";
  out += std::string("population=") + (generate_population ? "generate" : "existing") + "\n";
  out += "[faults]\n";
  out += "drop_request_rate=" + format_double(faults.drop_request_rate) + "\n";
  out += "drop_response_rate=" + format_double(faults.drop_response_rate) + "\n";
  out += "duplicate_rate=" + format_double(faults.duplicate_rate) + "\n";
  out += "drop_ack_rate=" + format_double(faults.drop_ack_rate) + "\n";
  out += "clearing_anomaly_rate=" + format_double(faults.clearing_anomaly_rate) + "\n";
  out += "[overrides]\n";
  for (const auto& [index, kind] : faults.overrides) {
    out += std::to_string(index) + "=" + std::string(to_string(kind)) + "\n";
  }
  return out;
}

std::string ScenarioResult::to_text() const {
  std::string out;
  auto put = [&](const char* key, auto value) { out += std::string(key) + "=" + std::to_string(value) + "\n"; };
  put("attempted", attempted);
  put("success", success);
  put("wrong_amount", wrong_amount);
  put("bill_is_zero", bill_is_zero);
  put("wrong_account", wrong_account);
  put("reversed", reversed);
  put("cancelled", cancelled);
  put("reversal_lost", reversal_lost);
  put("orphans", orphans);
  put("no_bill", no_bill);
  put("timeouts", timeouts);
  put("retries", retries);
  put("duplicates", duplicates);
  put("max_latency_ms", max_latency_ms);
  put("over_latency_budget", over_latency_budget);
  return out;
}

// --- replay log -------------------------------------------------------------------

void ReplayLog::record(Timestamp at, std::string_view direction, std::string_view fate,
                       std::string_view line) {
  lines_.push_back(format_datetime(at) + '\t' + std::to_string(lines_.size() + 1) + '\t' +
                   std::string(direction) + '\t' + std::string(fate) + '\t' + std::string(line));
}

void ReplayLog::save(const fs::path& path) const {
  std::string text;
  for (const auto& l : lines_) text += l + '\n';
  write_file(path, text);
}

// --- population -------------------------------------------------------------------

std::vector<PaymentSlot> prepare_population(const ScenarioConfig& config, ups::Engine& engine) {
  auto& store = engine.store();
  if (!store.students_in(config.period).empty()) {
    throw Error(ErrorCode::ConfigError,
                "store already has students in " + to_string(config.period) + "; use population=existing");
  }
  const auto& period = config.period;

  auto trng = SplitMix64::stream(config.seed, kTariffStream, 0);
  ledger::TariffBook book;
  book.period = period;
  for (const auto level : {DegreeLevel::S1, DegreeLevel::S2, DegreeLevel::S3}) {
    const auto lvl = std::string(to_string(level));
    book.general[registration_tariff(level)] = {"Registration " + lvl, Idr{trng.between(15, 40) * 100'000}};
    book.general[development_tariff(level)] = {"Development " + lvl, Idr{trng.between(5, 20) * 100'000}};
    book.general[credit_tariff(level)] = {"Credit " + lvl, Idr{trng.between(2, 6) * 50'000}};
  }
  constexpr int kCourses = 24;
  constexpr int kLabCourses = 6;
  std::vector<std::string> courses;
  for (int i = 0; i < kCourses; ++i) {
    char code[16];
    std::snprintf(code, sizeof code, "CRS%03d", 101 + i);
    ledger::CourseTariff ct;
    ct.course_code = code;
    auto fee = [&](const char* prefix) {
      return ledger::FeeItem{std::string(prefix) + code, Idr{trng.between(1, 6) * 50'000}};
    };
    if (i < kLabCourses || trng.bernoulli(0.3)) ct.lab = fee("LAB-");
    if (trng.bernoulli(0.2)) ct.studio = fee("STU-");
    if (trng.bernoulli(0.3)) ct.assist = fee("AST-");
    if (trng.bernoulli(0.2)) ct.tutor = fee("TUT-");
    book.course[code] = ct;
    courses.push_back(code);
  }

  store::AcademicBatch batch;
  const Timestamp registered = config.start.plus_ms(-30LL * 86'400'000);
  for (std::size_t i = 0; i < config.students; ++i) {
    auto rng = SplitMix64::stream(config.seed, kStudentStream, i);
    char id[24];
    std::snprintf(id, sizeof id, "%04d%06zu", period.year, i + 1);
    char name[32];
    std::snprintf(name, sizeof name, "Student %06zu", i + 1);
    ledger::StudentEnrollment s;
    s.period = period;
    s.student_id = id;
    s.name = name;
    const double u = rng.uniform();
    s.degree_level = u < 0.8 ? DegreeLevel::S1 : (u < 0.95 ? DegreeLevel::S2 : DegreeLevel::S3);
    s.pay_credits = rng.bernoulli(0.9);
    s.bill1_credits = ledger::default_bill1_credits(s.degree_level);
    batch.students.push_back(s);

    // One lab course keeps the second instalment positive; the rest push the
    // load past the credits billed up front.
    std::vector<int> order(kCourses);
    std::iota(order.begin(), order.end(), 0);
    const auto first = static_cast<int>(rng.below(kLabCourses));
    std::swap(order[0], order[static_cast<std::size_t>(first)]);
    for (std::size_t k = kCourses - 1; k > 1; --k) {
      std::swap(order[k], order[1 + rng.below(k)]);
    }
    const int target = s.bill1_credits + 1 + static_cast<int>(rng.below(8));
    int credits = 0;
    for (std::size_t k = 0; k < order.size() && credits < target; ++k) {
      const auto& ct = book.course.at(courses[static_cast<std::size_t>(order[k])]);
      ledger::CourseRegistration r;
      r.period = period;
      r.student_id = s.student_id;
      r.name = s.name;
      r.course_code = ct.course_code;
      r.credits = static_cast<int>(rng.between(2, 4));
      r.status_lab = ct.lab && (k == 0 || rng.bernoulli(0.7));
      r.status_studio = ct.studio && rng.bernoulli(0.7);
      r.status_assist = ct.assist && rng.bernoulli(0.7);
      r.status_tutor = ct.tutor && rng.bernoulli(0.5);
      r.trans_datetime = registered;
      credits += r.credits;
      batch.registrations.push_back(r);
    }
    if (rng.bernoulli(config.scholarship_rate)) {
      batch.scholarships.push_back(
          ledger::Scholarship{period, s.student_id, s.name, "SCH-01", Idr{rng.between(1, 10) * 250'000}});
    }
  }

  engine.update_tariff(book);
  engine.ingest_academic_data(batch);
  ups::BillComputeCommand cmd;
  if (period.is_short()) {
    cmd.entries.push_back({std::nullopt, Paycode::BillSS, period});
  } else {
    cmd.entries.push_back({std::nullopt, Paycode::Bill1, period});
    cmd.entries.push_back({std::nullopt, Paycode::Bill2, period});
  }
  engine.run_bill_computation(cmd);
  return existing_slots(config, store);
}

std::vector<PaymentSlot> existing_slots(const ScenarioConfig& config, const store::Store& store) {
  const auto students = store.students_in(config.period);
  std::vector<PaymentSlot> slots;
  for (const auto paycode : config.paycodes) {
    for (const auto& s : students) {
      for (const auto& bill : store.get_unpaid_bills(s.student_id, config.period)) {
        if (bill.paycode == paycode && bill.amount > Idr{0}) {
          slots.push_back({s.student_id, paycode});
          break;
        }
      }
    }
  }
  return slots;
}

std::vector<PaymentSlot> schedule_attempts(const ScenarioConfig& config, std::vector<PaymentSlot> slots) {
  if (!config.attempts) return slots;
  const std::size_t want = *config.attempts;
  if (want <= slots.size()) {
    slots.resize(want);
    return slots;
  }
  if (slots.empty()) throw Error(ErrorCode::NoBillAvailable, "no outstanding bills to attempt");
  const std::size_t base = slots.size();
  slots.reserve(want);
  for (std::size_t i = base; i < want; ++i) {
    auto rng = SplitMix64::stream(config.seed, kExtraSlotStream, i);
    slots.push_back(slots[rng.below(base)]);
  }
  return slots;
}

// --- virtual account system -------------------------------------------------------

VirtualAccountSystem::VirtualAccountSystem(ScenarioConfig config, ManualClock& clock,
                                           wire::Transport& transport)
    : config_(std::move(config)), clock_(clock), transport_(&transport) {}

std::string VirtualAccountSystem::transaction_no(char prefix, std::uint64_t index) const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%c%08llX%09llu", prefix,
                static_cast<unsigned long long>(config_.seed & 0xFFFFFFFFULL),
                static_cast<unsigned long long>(index + 1));
  return buf;
}

void VirtualAccountSystem::run(const std::vector<PaymentSlot>& slots) {
  while (next_index_ < slots.size()) {
    attempt(next_index_, slots[next_index_]);
    ++next_index_;
  }
}

std::optional<std::string> VirtualAccountSystem::send(const std::string& line, std::uint64_t index,
                                                       int phase, FaultKind forced,
                                                       bool lose_every_reply) {
  const auto& f = config_.faults;
  for (int n = 0; n < config_.max_sends; ++n) {
    if (n > 0) ++result_.retries;
    auto rng = SplitMix64::stream(config_.seed, kSendStream + static_cast<std::uint64_t>(phase),
                                  index * 16 + static_cast<std::uint64_t>(n));
    const bool first = n == 0;
    const bool drop_request = (first && forced == FaultKind::DropRequest) || rng.bernoulli(f.drop_request_rate);
    const bool duplicate = (first && forced == FaultKind::Duplicate) || rng.bernoulli(f.duplicate_rate);
    const bool drop_response =
        lose_every_reply || (first && forced == FaultKind::DropResponse) || rng.bernoulli(f.drop_response_rate);

    replay_.record(clock_.now(), "VAS>UPS", drop_request ? "LOST" : "SENT", line);
    if (drop_request) {
      clock_.advance_ms(config_.latency_ms);
      continue;
    }
    std::string reply = transport_->exchange(line);
    if (duplicate) {
      ++result_.duplicates;
      replay_.record(clock_.now(), "VAS>UPS", "DUPLICATE", line);
      const std::string second = transport_->exchange(line);
      replay_.record(clock_.now(), "UPS>VAS", "IGNORED", second);
    }
    clock_.advance_ms(config_.latency_ms);
    replay_.record(clock_.now(), "UPS>VAS", drop_response ? "LOST" : "RECEIVED", reply);
    if (drop_response) continue;
    return reply;
  }
  return std::nullopt;
}

void VirtualAccountSystem::attempt(std::uint64_t index, const PaymentSlot& slot) {
  const Timestamp started = clock_.now();
  Faults faults;
  if (const auto it = config_.faults.overrides.find(index); it != config_.faults.overrides.end()) {
    faults.forced = it->second;
    faults.drop_ack = it->second == FaultKind::DropAck;
    faults.clearing = it->second == FaultKind::ClearingAnomaly;
  } else {
    auto rng = SplitMix64::stream(config_.seed, kFaultStream, index);
    faults.drop_ack = rng.bernoulli(config_.faults.drop_ack_rate);
    faults.clearing = rng.bernoulli(config_.faults.clearing_anomaly_rate);
  }
  auto crng = SplitMix64::stream(config_.seed, kChannelStream, index);
  const DeliveryChannel channel =
      faults.clearing ? DeliveryChannel::Clearing : kClientChannels[crng.below(kClientChannels.size())];

  protocol::BillRequest request{slot.student_id, transaction_no('B', index), config_.bank_code,
                                clock_.now(), channel, config_.institution_code};
  const auto reply = send(protocol::encode(request), index, 0, FaultKind::None, false);
  std::optional<protocol::BillResponse> response;
  if (reply) {
    try {
      const auto msg = protocol::decode(*reply);
      if (const auto* r = std::get_if<protocol::BillResponse>(&msg)) response = *r;
    } catch (const Error&) {
    }
  }
  if (!response) {
    ++result_.timeouts;
    finish(index, started);
    return;
  }
  const auto item = std::find_if(response->items.begin(), response->items.end(),
                                 [&](const protocol::BillItem& i) { return i.paycode == slot.paycode; });
  if (item == response->items.end()) {
    ++result_.no_bill;
    finish(index, started);
    return;
  }

  Idr amount = item->amount;
  if (faults.clearing || faults.forced == FaultKind::WrongAmount) {
    amount = amount > Idr{1} ? amount - Idr{1} : amount + Idr{1};
  }
  protocol::PaymentMessage payment;
  payment.transaction_type = TransactionType::Payment;
  payment.student_id = faults.forced == FaultKind::WrongAccount ? "X" + slot.student_id : slot.student_id;
  payment.paycode = slot.paycode;
  payment.amount = amount;
  payment.bank_code = config_.bank_code;
  payment.transaction_no = transaction_no('P', index);
  payment.trans_datetime = clock_.now();
  payment.del_channel = channel;
  payment.institution_code = config_.institution_code;

  inflight_ = payment;
  inflight_started_ = started;
  inflight_entry_ = ledger_.add(VasEntry{payment.student_id, payment.bank_code, payment.transaction_no,
                                         payment.paycode, payment.amount, channel, VasOutcome::Pending});
  phase_ = Phase::Payment;
  const auto status_line = send(protocol::encode(payment), index, 1, faults.forced, faults.drop_ack);
  std::optional<PaymentStatus> status;
  if (status_line) {
    try {
      const auto msg = protocol::decode(*status_line);
      if (const auto* s = std::get_if<protocol::PaymentStatusMessage>(&msg)) status = s->status;
    } catch (const Error&) {
    }
  }
  if (!status) {
    settle_lost_status(index);
  } else {
    auto& entry = ledger_.at(inflight_entry_);
    switch (*status) {
      case PaymentStatus::Success: ++result_.success; break;
      case PaymentStatus::WrongAmount: ++result_.wrong_amount; break;
      case PaymentStatus::BillIsZero: ++result_.bill_is_zero; break;
      case PaymentStatus::WrongAccount: ++result_.wrong_account; break;
    }
    if (*status == PaymentStatus::Success) {
      entry.outcome = VasOutcome::Success;
    } else if (channel == DeliveryChannel::Clearing) {
      entry.outcome = VasOutcome::ClearingAccepted;
      ++result_.orphans;
    } else {
      entry.outcome = VasOutcome::Refused;
    }
  }
  phase_ = Phase::Quiet;
  inflight_.reset();
  finish(index, started);
}

void VirtualAccountSystem::settle_lost_status(std::uint64_t index) {
  phase_ = Phase::Reversal;
  auto reversal = inflight_->as_reversal();
  reversal.trans_datetime = clock_.now();
  const auto reply = send(protocol::encode(reversal), index, 2, FaultKind::None, false);
  std::optional<ReversalStatus> status;
  if (reply) {
    try {
      const auto msg = protocol::decode(*reply);
      if (const auto* s = std::get_if<protocol::ReversalStatusMessage>(&msg)) status = s->status;
    } catch (const Error&) {
    }
  }
  auto& entry = ledger_.at(inflight_entry_);
  if (!status) {
    entry.outcome = VasOutcome::ReversalLost;
    ++result_.reversal_lost;
  } else if (*status == ReversalStatus::Success) {
    entry.outcome = VasOutcome::Reversed;
    ++result_.reversed;
  } else {
    entry.outcome = VasOutcome::Cancelled;
    ++result_.cancelled;
  }
}

void VirtualAccountSystem::resume(wire::Transport& transport) {
  transport_ = &transport;
  if (phase_ == Phase::Quiet || !inflight_) return;
  settle_lost_status(next_index_);
  phase_ = Phase::Quiet;
  inflight_.reset();
  finish(next_index_, inflight_started_);
  ++next_index_;
}

void VirtualAccountSystem::finish(std::uint64_t, Timestamp started) {
  ++result_.attempted;
  const std::int64_t latency = clock_.now().ms - started.ms;
  result_.max_latency_ms = std::max(result_.max_latency_ms, latency);
  if (latency > kLatencyBudgetMs) ++result_.over_latency_budget;
}

// --- whole scenario ---------------------------------------------------------------

ScenarioRun run_scenario(const ScenarioConfig& config, ups::Engine& engine, ManualClock& clock) {
  if (engine.state() == ups::EngineState::Initializing) engine.start();
  clock.set(std::max(config.start, clock.now()));
  auto slots = config.generate_population ? prepare_population(config, engine)
                                          : existing_slots(config, engine.store());
  slots = schedule_attempts(config, std::move(slots));
  wire::InProcessTransport transport(engine);
  VirtualAccountSystem vas(config, clock, transport);
  vas.run(slots);
  return ScenarioRun{vas.result(), vas.ledger(), vas.replay()};
}

void write_outputs(const ScenarioRun& run, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "result.txt", run.result.to_text());
  run.replay.save(dir / "replay.log");
  run.ledger.save(dir / "vas_ledger.tsv");
}

}  // namespace tuition::sim

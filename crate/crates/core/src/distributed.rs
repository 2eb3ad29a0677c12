//! Distributed price iteration with local information only.
//!
//! Companies never see budgets or rival capacities and consumers never see
//! capacities or other consumers' data. The only traffic is
//!
//! * demand reports, consumer -> company, one per cell;
//! * price updates or no-change signals, company -> all consumers.
//!
//! Each company moves its price by excess demand,
//!
//! ```text
//! p' = p + (sum_n d_n - G) / eps,    eps = (G + N) / p + delta
//! ```
//!
//! and the loop stops once a full round changes no price by more than
//! `tol * max(1, p)`.
//!
//! In [`UpdateOrder::Sequential`] mode cells are updated one at a time in
//! `(company, period)` order and consumers re-solve against the new board
//! before the next cell is processed. A round visits every cell once. Updates
//! below the tolerance are sent as no-change signals and not applied.
//! [`UpdateOrder::Synchronous`] updates every cell against one shared demand
//! board per round; it is a cheaper Jacobi-style variant for large runs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{clamp_prices, equilibrium_prices_closed_form};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{PriceSchedule, Scenario};

/// Prices above this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateOrder {
    Sequential,
    Synchronous,
}

impl FromStr for UpdateOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(UpdateOrder::Sequential),
            "synchronous" => Ok(UpdateOrder::Synchronous),
            other => Err(Error::InvalidParameter(format!("unknown update order `{other}`"))),
        }
    }
}

/// Initial price board.
#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    Uniform(f64),
    PerCell(PriceSchedule),
    /// Uniform draws in `[low, high)` from a seeded ChaCha stream.
    Random { seed: u64, low: f64, high: f64 },
}

impl InitPolicy {
    pub fn board(&self, companies: usize, periods: usize) -> Result<PriceSchedule> {
        let board = match self {
            InitPolicy::Uniform(p) => PriceSchedule::uniform(companies, periods, *p),
            InitPolicy::PerCell(b) => {
                b.check_shape(companies, periods)?;
                b.clone()
            }
            InitPolicy::Random { seed, low, high } => {
                if !(low < high) {
                    return Err(Error::InvalidParameter("random init needs low < high".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                PriceSchedule(
                    (0..companies)
                        .map(|_| (0..periods).map(|_| rng.gen_range(*low..*high)).collect())
                        .collect(),
                )
            }
        };
        board.ensure_positive()?;
        Ok(board)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub delta: f64,
    pub tol: f64,
    pub max_rounds: usize,
    pub order: UpdateOrder,
    pub init: InitPolicy,
    /// Permits `delta < 0`, for demonstrating divergence.
    pub allow_negative_delta: bool,
    pub record_messages: bool,
    pub exec: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 0.0,
            tol: 1e-8,
            max_rounds: 10_000,
            order: UpdateOrder::Sequential,
            init: InitPolicy::Uniform(1.0),
            allow_negative_delta: false,
            record_messages: true,
            exec: Execution::default(),
        }
    }
}

/// A company's private state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyAgent {
    pub company: usize,
    pub id: String,
    /// Own capacity per period.
    pub capacity: Vec<f64>,
    /// Own current price per period.
    pub prices: Vec<f64>,
    pub delta: f64,
    /// Number of consumers (public).
    pub population: usize,
    /// Last aggregate demand observed per period.
    pub last_aggregate: Vec<f64>,
}

/// Result of one price update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceStep {
    pub new_price: f64,
    pub change: f64,
    /// `|change| > tol * max(1, p)`.
    pub changed: bool,
    pub epsilon: f64,
    /// `p * eps - (G - sum d)`; positive means the step cannot cross zero.
    pub positivity_margin: f64,
}

/// `eps = (G(t) + N) / p + delta`.
pub fn epsilon_schedule(agent: &CompanyAgent, t: usize, price: f64) -> Result<f64> {
    if !(price > 0.0) {
        return Err(Error::NonPositivePrice {
            company: agent.company,
            period: t,
            value: price,
        });
    }
    Ok((agent.capacity[t] + agent.population as f64) / price + agent.delta)
}

/// `p' = p + (sum d - G) / eps` for the agent's current price at `t`.
pub fn price_update(agent: &CompanyAgent, t: usize, aggregate_demand: f64, tol: f64) -> Result<PriceStep> {
    let p = agent.prices[t];
    let epsilon = epsilon_schedule(agent, t, p)?;
    let excess = aggregate_demand - agent.capacity[t];
    let new_price = p + excess / epsilon;
    let change = new_price - p;
    Ok(PriceStep {
        new_price,
        change,
        changed: !(change.abs() <= tol * p.abs().max(1.0)),
        epsilon,
        positivity_margin: p * epsilon + excess,
    })
}

/// A consumer's private state and its copy of the public price board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerAgent {
    pub consumer: usize,
    pub id: String,
    pub budget: f64,
    pub energy_min: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub board: PriceSchedule,
}

impl ConsumerAgent {
    /// Closed-form demand for one cell against the agent's board.
    pub fn demand(&self, k: usize, t: usize) -> f64 {
        let cells = (self.board.companies() * self.board.periods()) as f64;
        (self.budget + self.zeta * self.board.total()) / (cells * self.board.get(k, t)) - self.zeta
    }

    fn demands(&self) -> Vec<Vec<f64>> {
        let cells = (self.board.companies() * self.board.periods()) as f64;
        let num = self.budget + self.zeta * self.board.total();
        self.board
            .rows()
            .iter()
            .map(|row| row.iter().map(|&p| num / (cells * p) - self.zeta).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Consumer(usize),
    Company(usize),
    Broadcast,
}

/// Payload type of a message. Only the first three are legal; anything else
/// is kept verbatim so an imported log can be audited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageKind {
    PriceUpdate,
    DemandReport,
    NoChange,
    Other(String),
}

impl MessageKind {
    pub fn as_str(&self) -> &str {
        match self {
            MessageKind::PriceUpdate => "price-update",
            MessageKind::DemandReport => "demand-report",
            MessageKind::NoChange => "no-change",
            MessageKind::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "price-update" => MessageKind::PriceUpdate,
            "demand-report" => MessageKind::DemandReport,
            "no-change" => MessageKind::NoChange,
            other => MessageKind::Other(other.to_string()),
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub round: usize,
    pub sender: Endpoint,
    pub receiver: Endpoint,
    pub kind: MessageKind,
    pub company: usize,
    pub period: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Board at the end of the round.
    pub prices: Vec<Vec<f64>>,
    /// Aggregate demand each cell's update was based on.
    pub aggregate_demand: Vec<Vec<f64>>,
    /// Applied change per cell (zero for no-change).
    pub price_deltas: Vec<Vec<f64>>,
    /// Smallest positivity margin over updates with demand below capacity.
    pub min_positivity_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Converged { round: usize },
    Diverged { round: usize, company: usize, period: usize, value: f64 },
    CapExceeded { rounds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub rounds: Vec<RoundRecord>,
    pub messages: Vec<Message>,
    pub outcome: Outcome,
    pub final_prices: PriceSchedule,
    /// `max |sum d - G| / max(1, G)` at the final board.
    pub max_residual: f64,
    /// `max |p - p*| / max(1, p*)` against the closed form, when comparable.
    pub closed_form_gap: Option<f64>,
    pub company_agents: Vec<CompanyAgent>,
    pub consumer_agents: Vec<ConsumerAgent>,
}

impl IterationTrace {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, Outcome::Converged { .. })
    }

    /// Ok for a converged run, otherwise the matching error.
    pub fn ensure_converged(&self) -> Result<&Self> {
        match &self.outcome {
            Outcome::Converged { .. } => Ok(self),
            Outcome::Diverged {
                round,
                company,
                period,
                value,
            } => Err(Error::InvalidParameter(format!(
                "diverged in round {round} at company {company}, period {period} (price {value})"
            ))),
            Outcome::CapExceeded { rounds } => Err(Error::InvalidParameter(format!(
                "no convergence within {rounds} rounds"
            ))),
        }
    }

    /// Every price on every round board was strictly positive.
    pub fn prices_stayed_positive(&self) -> bool {
        self.rounds.iter().flat_map(|r| r.prices.iter().flatten()).all(|&p| p > 0.0)
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            outcome: self.outcome.clone(),
            rounds: self.rounds.len(),
            final_prices: self.final_prices.clone(),
            max_residual: self.max_residual,
            closed_form_gap: self.closed_form_gap,
        }
    }

    /// One JSON object per line: `{round, sender, receiver, kind, period, company, value}`.
    /// Periods are 1-based; endpoints and companies are written by id.
    pub fn write_jsonl<W: Write>(&self, s: &Scenario, mut out: W) -> Result<()> {
        let name = |e: Endpoint| match e {
            Endpoint::Consumer(n) => s.consumers.get(n).map_or("?", |c| c.id.as_str()),
            Endpoint::Company(k) => s.companies.get(k).map_or("?", |c| c.id.as_str()),
            Endpoint::Broadcast => "*",
        };
        for m in &self.messages {
            let rec = MessageRecord {
                round: m.round,
                sender: name(m.sender),
                receiver: name(m.receiver),
                kind: m.kind.as_str(),
                period: m.period + 1,
                company: s.companies.get(m.company).map_or("?", |c| c.id.as_str()),
                value: m.value,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct MessageRecord<'a> {
    round: usize,
    sender: &'a str,
    receiver: &'a str,
    kind: &'a str,
    period: usize,
    company: &'a str,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub outcome: Outcome,
    pub rounds: usize,
    pub final_prices: PriceSchedule,
    pub max_residual: f64,
    pub closed_form_gap: Option<f64>,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    companies: Vec<CompanyAgent>,
    consumers: Vec<ConsumerAgent>,
    messages: Vec<Message>,
}

enum CellResult {
    Ok { delta: f64, margin: Option<f64> },
    Diverged(f64),
}

impl Runner<'_> {
    fn log(&mut self, m: Message) {
        if self.cfg.record_messages {
            self.messages.push(m);
        }
    }

    fn report_demands(&mut self, round: usize, k: usize, t: usize, reports: &[f64]) -> f64 {
        for (n, &d) in reports.iter().enumerate() {
            self.log(Message {
                round,
                sender: Endpoint::Consumer(n),
                receiver: Endpoint::Company(k),
                kind: MessageKind::DemandReport,
                company: k,
                period: t,
                value: d,
            });
        }
        // Summed in consumer order so runs are reproducible under any Execution.
        reports.iter().sum()
    }

    /// Company `k` updates cell `t` from `aggregate` and broadcasts the outcome.
    fn update_cell(&mut self, round: usize, k: usize, t: usize, aggregate: f64) -> Result<CellResult> {
        let agent = &mut self.companies[k];
        agent.last_aggregate[t] = aggregate;
        let step = price_update(agent, t, aggregate, self.cfg.tol)?;
        let margin = (aggregate < agent.capacity[t]).then_some(step.positivity_margin);
        let p = step.new_price;
        if step.changed && !(p > 0.0 && p.is_finite() && p.abs() <= DIVERGENCE_LIMIT) {
            return Ok(CellResult::Diverged(p));
        }
        let (kind, value, delta) = if step.changed {
            agent.prices[t] = p;
            (MessageKind::PriceUpdate, p, step.change)
        } else {
            (MessageKind::NoChange, agent.prices[t], 0.0)
        };
        self.log(Message {
            round,
            sender: Endpoint::Company(k),
            receiver: Endpoint::Broadcast,
            kind,
            company: k,
            period: t,
            value,
        });
        if delta != 0.0 {
            for c in &mut self.consumers {
                c.board.0[k][t] = value;
            }
        }
        Ok(CellResult::Ok { delta, margin })
    }

    fn board(&self) -> Vec<Vec<f64>> {
        self.companies.iter().map(|c| c.prices.clone()).collect()
    }
}

/// Runs the distributed price iteration on `s`.
///
/// Divergence and hitting the round cap are reported in
/// [`IterationTrace::outcome`], not as errors.
pub fn run_algorithm1(s: &Scenario, cfg: &RunConfig) -> Result<IterationTrace> {
    s.ensure_valid()?;
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    if cfg.max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be >= 1".into()));
    }
    if !cfg.delta.is_finite() {
        return Err(Error::InvalidParameter("delta must be finite".into()));
    }
    if cfg.delta < 0.0 && !cfg.allow_negative_delta {
        return Err(Error::NegativeDelta(cfg.delta));
    }
    let (kk, tt) = (s.k(), s.periods);
    let init = cfg.init.board(kk, tt)?;

    let mut runner = Runner {
        cfg,
        companies: s
            .companies
            .iter()
            .enumerate()
            .map(|(k, c)| CompanyAgent {
                company: k,
                id: c.id.clone(),
                capacity: c.capacity.clone(),
                prices: init.0[k].clone(),
                delta: cfg.delta,
                population: s.n(),
                last_aggregate: vec![0.0; tt],
            })
            .collect(),
        consumers: s
            .consumers
            .iter()
            .enumerate()
            .map(|(n, c)| ConsumerAgent {
                consumer: n,
                id: c.id.clone(),
                budget: c.budget,
                energy_min: c.energy_min,
                gamma: c.gamma,
                zeta: c.zeta,
                board: init.clone(),
            })
            .collect(),
        messages: Vec::new(),
    };

    let mut rounds = Vec::new();
    let mut outcome = Outcome::CapExceeded { rounds: cfg.max_rounds };
    'rounds: for round in 1..=cfg.max_rounds {
        let mut aggregate = vec![vec![0.0; tt]; kk];
        let mut deltas = vec![vec![0.0; tt]; kk];
        let mut min_margin: Option<f64> = None;
        let mut diverged = None;

        match cfg.order {
            UpdateOrder::Sequential => {
                'cells: for k in 0..kk {
                    for t in 0..tt {
                        let reports = cfg.exec.map_slice(&runner.consumers, |c| c.demand(k, t));
                        let agg = runner.report_demands(round, k, t, &reports);
                        aggregate[k][t] = agg;
                        match runner.update_cell(round, k, t, agg)? {
                            CellResult::Ok { delta, margin } => {
                                deltas[k][t] = delta;
                                if let Some(m) = margin {
                                    min_margin = Some(min_margin.map_or(m, |x| x.min(m)));
                                }
                            }
                            CellResult::Diverged(value) => {
                                diverged = Some((k, t, value));
                                break 'cells;
                            }
                        }
                    }
                }
            }
            UpdateOrder::Synchronous => {
                let all = cfg.exec.map_slice(&runner.consumers, ConsumerAgent::demands);
                for k in 0..kk {
                    for t in 0..tt {
                        let reports: Vec<f64> = all.iter().map(|d| d[k][t]).collect();
                        aggregate[k][t] = runner.report_demands(round, k, t, &reports);
                    }
                }
                'sync: for k in 0..kk {
                    for t in 0..tt {
                        match runner.update_cell(round, k, t, aggregate[k][t])? {
                            CellResult::Ok { delta, margin } => {
                                deltas[k][t] = delta;
                                if let Some(m) = margin {
                                    min_margin = Some(min_margin.map_or(m, |x| x.min(m)));
                                }
                            }
                            CellResult::Diverged(value) => {
                                diverged = Some((k, t, value));
                                break 'sync;
                            }
                        }
                    }
                }
            }
        }

        let any_change = deltas.iter().flatten().any(|&d| d != 0.0);
        rounds.push(RoundRecord {
            round,
            prices: runner.board(),
            aggregate_demand: aggregate,
            price_deltas: deltas,
            min_positivity_margin: min_margin,
        });
        if let Some((company, period, value)) = diverged {
            outcome = Outcome::Diverged {
                round,
                company,
                period,
                value,
            };
            break 'rounds;
        }
        if !any_change {
            outcome = Outcome::Converged { round };
            break;
        }
    }

    let final_prices = PriceSchedule(runner.board());
    let max_residual = residual(s, &runner.consumers, &final_prices);
    let closed_form_gap = match outcome {
        Outcome::Converged { .. } => closed_form_gap(s, &final_prices),
        _ => None,
    };
    Ok(IterationTrace {
        rounds,
        messages: runner.messages,
        outcome,
        final_prices,
        max_residual,
        closed_form_gap,
        company_agents: runner.companies,
        consumer_agents: runner.consumers,
    })
}

fn residual(s: &Scenario, consumers: &[ConsumerAgent], board: &PriceSchedule) -> f64 {
    if board.first_non_positive().is_some() {
        return f64::NAN;
    }
    let demands: Vec<_> = consumers.iter().map(ConsumerAgent::demands).collect();
    s.companies
        .iter()
        .enumerate()
        .flat_map(|(k, c)| {
            let demands = &demands;
            c.capacity.iter().enumerate().map(move |(t, &g)| {
                let agg: f64 = demands.iter().map(|d| d[k][t]).sum();
                (agg - g).abs() / g.max(1.0)
            })
        })
        .fold(0.0, f64::max)
}

/// Gap to the closed form, or `None` when price bounds clamp it. Demands
/// are never clamped during the iteration, so its fixed point is the
/// closed-form board even where some formula demands are negative.
fn closed_form_gap(s: &Scenario, board: &PriceSchedule) -> Option<f64> {
    let closed = equilibrium_prices_closed_form(s).ok()?;
    if !clamp_prices(&closed, &s.companies).1.is_empty() {
        return None;
    }
    Some(max_price_gap(board, &closed))
}

/// `max |a - b| / max(1, |b|)` over cells.
pub fn max_price_gap(a: &PriceSchedule, b: &PriceSchedule) -> f64 {
    a.cells()
        .map(|(k, t, p)| (p - b.get(k, t)).abs() / b.get(k, t).abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Messages a completed round emits: `N K T` demand reports plus `K T` price
/// updates or no-change signals. Holds for both update orders.
pub fn messages_per_round(s: &Scenario) -> usize {
    let cells = s.k() * s.periods;
    s.n() * cells + cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    /// Offending message index, or `None` for agent-state findings.
    pub message: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub messages_checked: usize,
    pub violations: Vec<AuditViolation>,
}

/// Checks that the trace only ever carried prices, demands and no-change
/// signals along the permitted routes, and that no agent holds another
/// party's private data.
pub fn privacy_audit(trace: &IterationTrace, s: &Scenario) -> AuditReport {
    let mut violations = Vec::new();
    let (n, kk, tt) = (s.n(), s.k(), s.periods);
    for (i, m) in trace.messages.iter().enumerate() {
        let mut bad = |reason: String| {
            violations.push(AuditViolation {
                message: Some(i),
                reason,
            })
        };
        if m.company >= kk || m.period >= tt {
            bad(format!("cell ({}, {}) out of range", m.company, m.period));
            continue;
        }
        match &m.kind {
            MessageKind::DemandReport => {
                if !matches!(m.sender, Endpoint::Consumer(c) if c < n) {
                    bad(format!("demand report sent by {:?}", m.sender));
                }
                if m.receiver != Endpoint::Company(m.company) {
                    bad(format!("demand report for company {} routed to {:?}", m.company, m.receiver));
                }
            }
            MessageKind::PriceUpdate | MessageKind::NoChange => {
                if m.sender != Endpoint::Company(m.company) {
                    bad(format!("{} for company {} sent by {:?}", m.kind, m.company, m.sender));
                }
                if m.receiver != Endpoint::Broadcast {
                    bad(format!("{} must be broadcast, sent to {:?}", m.kind, m.receiver));
                }
            }
            MessageKind::Other(kind) => bad(format!("forbidden payload kind `{kind}`")),
        }
        if !m.value.is_finite() {
            bad("non-finite payload".into());
        }
    }

    let mut agent_bad = |reason: String| violations.push(AuditViolation { message: None, reason });
    if trace.company_agents.len() != kk || trace.consumer_agents.len() != n {
        agent_bad("agent count differs from scenario".into());
    }
    for (k, a) in trace.company_agents.iter().enumerate() {
        let own = s.companies.get(k);
        if a.company != k || own.map(|c| &c.id) != Some(&a.id) {
            agent_bad(format!("company agent {k} has foreign identity {}", a.id));
        } else if own.map(|c| &c.capacity) != Some(&a.capacity) {
            agent_bad(format!("company agent {k} holds a capacity vector that is not its own"));
        }
        if a.population != n {
            agent_bad(format!("company agent {k} has wrong population count"));
        }
    }
    for (i, a) in trace.consumer_agents.iter().enumerate() {
        match s.consumers.get(i) {
            Some(c) if c.id == a.id && c.budget == a.budget && c.zeta == a.zeta => {}
            _ => agent_bad(format!("consumer agent {i} holds data that is not its own")),
        }
        if a.board.companies() != kk || a.board.periods() != tt {
            agent_bad(format!("consumer agent {i} board has wrong shape"));
        }
    }

    AuditReport {
        passed: violations.is_empty(),
        messages_checked: trace.messages.len(),
        violations,
    }
}

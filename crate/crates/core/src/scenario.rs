//! Post-thyroidectomy hematoma scenario as a deterministic state machine.
//!
//! The scenario owns the task phase, patient vitals, the countdown and the
//! five acute stress triggers. It holds no floating-point state, so whole
//! states can be hashed when enumerating action sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskPhase {
    Preparation,
    WoundOpening,
    ClotRemoving,
    StatusMonitoring,
    EmergencyResponse,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SutureLayer {
    Subcuticular,
    Subcutaneous,
    Platysma,
}

impl SutureLayer {
    pub const ORDER: [SutureLayer; 3] = [Self::Subcuticular, Self::Subcutaneous, Self::Platysma];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClotTool {
    Forceps,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    PressCallBell,
    ArrangeDrapes,
    RemoveSteriStrips,
    CutSutures { layer: SutureLayer },
    FetchScissorsFromSupply,
    FetchSterileForceps,
    RemoveClot { tool: ClotTool },
    ActivateAltLight,
    CheckMonitor,
    RequestAnesthesia,
    PrepareIntubationKit,
    BriefTeam,
}

impl Action {
    /// Every distinct action, parameters expanded.
    pub const ALL: [Action; 15] = [
        Action::PressCallBell,
        Action::ArrangeDrapes,
        Action::RemoveSteriStrips,
        Action::CutSutures { layer: SutureLayer::Subcuticular },
        Action::CutSutures { layer: SutureLayer::Subcutaneous },
        Action::CutSutures { layer: SutureLayer::Platysma },
        Action::FetchScissorsFromSupply,
        Action::FetchSterileForceps,
        Action::RemoveClot { tool: ClotTool::Forceps },
        Action::RemoveClot { tool: ClotTool::Manual },
        Action::ActivateAltLight,
        Action::CheckMonitor,
        Action::RequestAnesthesia,
        Action::PrepareIntubationKit,
        Action::BriefTeam,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionEvent {
    pub t_ms: i64,
    #[serde(flatten)]
    pub action: Action,
}

/// The next required step. Guidance content hangs off this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureStep {
    CallForHelp,
    ArrangeDrapes,
    RemoveSteriStrips,
    FetchScissors,
    Cut(SutureLayer),
    RemoveClot,
    ReplaceForceps,
    CheckMonitor,
    ReportStatus,
    RequestAnesthesia,
    PrepareIntubation,
    BriefTeam,
}

impl ProcedureStep {
    pub fn phase(self) -> TaskPhase {
        use ProcedureStep::*;
        match self {
            CallForHelp | ArrangeDrapes => TaskPhase::Preparation,
            RemoveSteriStrips | FetchScissors | Cut(_) => TaskPhase::WoundOpening,
            RemoveClot | ReplaceForceps => TaskPhase::ClotRemoving,
            CheckMonitor | ReportStatus => TaskPhase::StatusMonitoring,
            RequestAnesthesia | PrepareIntubation | BriefTeam => TaskPhase::EmergencyResponse,
        }
    }

    pub fn goal_text(self) -> &'static str {
        match self.phase() {
            TaskPhase::Preparation => "Get help on the way and prepare the bedside",
            TaskPhase::WoundOpening => "Open the wound to relieve pressure on the airway",
            TaskPhase::ClotRemoving => "Evacuate the hematoma",
            TaskPhase::StatusMonitoring => "Confirm the patient's condition",
            TaskPhase::EmergencyResponse => "Secure the airway with the emergency team",
            TaskPhase::Done => "",
        }
    }

    pub fn instruction_text(self) -> &'static str {
        use ProcedureStep::*;
        match self {
            CallForHelp => "Press the call button at the patient's bedside.",
            ArrangeDrapes => "Arrange sterile drapes around the neck",
            RemoveSteriStrips => "Please remove the Steri-strips covering the wound",
            FetchScissors => "Fetch suture scissors from the supply cart",
            Cut(SutureLayer::Subcuticular) => "Cut the subcuticular sutures",
            Cut(SutureLayer::Subcutaneous) => "Cut the subcutaneous sutures",
            Cut(SutureLayer::Platysma) => "Cut the platysma sutures",
            RemoveClot => "Remove the clot from the wound",
            ReplaceForceps => "Fetch sterile forceps or remove the clot by hand",
            CheckMonitor => "Check the patient monitor",
            ReportStatus => "Call to report the situation",
            RequestAnesthesia => "Request the anesthesia team",
            PrepareIntubation => "Prepare the intubation kit",
            BriefTeam => "Brief the arriving team",
        }
    }

    /// Scene object highlighted by visual guidance.
    pub fn target(self) -> &'static str {
        use ProcedureStep::*;
        match self {
            CallForHelp | ReportStatus => "call_bell",
            ArrangeDrapes => "drape_pack",
            RemoveSteriStrips => "steri_strips",
            FetchScissors => "supply_cart",
            Cut(SutureLayer::Subcuticular) => "suture_subcuticular",
            Cut(SutureLayer::Subcutaneous) => "suture_subcutaneous",
            Cut(SutureLayer::Platysma) => "suture_platysma",
            RemoveClot => "wound",
            ReplaceForceps => "supply_cart",
            CheckMonitor => "monitor",
            RequestAnesthesia => "phone",
            PrepareIntubation => "intubation_kit",
            BriefTeam => "team_area",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriggerKind {
    T1a,
    T1b,
    T1c,
    T2,
    T3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannel {
    MonitorAlarm,
    PhoneRing,
    Conversation,
}

impl NoiseChannel {
    pub const ALL: [NoiseChannel; 3] = [Self::MonitorAlarm, Self::PhoneRing, Self::Conversation];

    /// Channels that carry no task information and may be suppressed.
    pub const IRRELEVANT: [NoiseChannel; 2] = [Self::PhoneRing, Self::Conversation];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientVitals {
    pub hr_bpm: u32,
    pub spo2_percent: u32,
}

impl PatientVitals {
    pub fn is_unstable(&self) -> bool {
        self.spo2_percent < 90 || self.hr_bpm > 120
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lighting {
    Normal,
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum T2Timing {
    Fixed { at_ms: i64 },
    Random { min_ms: i64, max_ms: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerConfig {
    pub t1a: bool,
    pub t1b: bool,
    pub t1c: bool,
    /// Delay after entering wound opening before the lights fail.
    pub t1c_delay_ms: i64,
    pub t2: bool,
    pub t2_timing: T2Timing,
    pub t2_deduction_ms: i64,
    pub t2_vitals: PatientVitals,
    pub t3: bool,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            t1a: true,
            t1b: true,
            t1c: true,
            t1c_delay_ms: 6_000,
            t2: true,
            t2_timing: T2Timing::Random {
                min_ms: 60_000,
                max_ms: 120_000,
            },
            t2_deduction_ms: 120_000,
            t2_vitals: PatientVitals {
                hr_bpm: 130,
                spo2_percent: 80,
            },
            t3: true,
        }
    }
}

impl TriggerConfig {
    pub fn none() -> Self {
        Self {
            t1a: false,
            t1b: false,
            t1c: false,
            t2: false,
            t3: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub initial_countdown_ms: i64,
    pub continue_after_expiry: bool,
    pub initial_vitals: PatientVitals,
    pub recovered_vitals: PatientVitals,
    pub triggers: TriggerConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            initial_countdown_ms: 360_000,
            continue_after_expiry: true,
            initial_vitals: PatientVitals {
                hr_bpm: 110,
                spo2_percent: 94,
            },
            recovered_vitals: PatientVitals {
                hr_bpm: 88,
                spo2_percent: 97,
            },
            triggers: TriggerConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// The controlled study timing: deterioration exactly one minute in.
    pub fn study() -> Self {
        let mut c = Self::default();
        c.triggers.t2_timing = T2Timing::Fixed { at_ms: 60_000 };
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.initial_countdown_ms <= 0 {
            return bad("initial_countdown_ms must be positive".into());
        }
        let t = &self.triggers;
        if t.t2_deduction_ms < 0 || t.t1c_delay_ms < 0 {
            return bad("trigger delays and deductions must be non-negative".into());
        }
        match t.t2_timing {
            T2Timing::Fixed { at_ms } if at_ms < 0 => bad(format!("t2 time {at_ms} is negative")),
            T2Timing::Random { min_ms, max_ms } if min_ms < 0 || max_ms < min_ms => {
                bad(format!("bad t2 range [{min_ms}, {max_ms}]"))
            }
            _ => Ok(()),
        }?;
        for v in [self.initial_vitals, self.recovered_vitals, t.t2_vitals] {
            if v.spo2_percent > 100 {
                return bad(format!("spo2 {} exceeds 100", v.spo2_percent));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    CriticalError,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionResult {
    pub outcome: Outcome,
    /// The action completed a required step.
    pub progressed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ActionResult {
    fn accepted(progressed: bool) -> Self {
        Self {
            outcome: Outcome::Accepted,
            progressed,
            reason: None,
        }
    }

    fn error(reason: &str) -> Self {
        Self {
            outcome: Outcome::CriticalError,
            progressed: false,
            reason: Some(reason.into()),
        }
    }

    fn rejected(reason: &str) -> Self {
        Self {
            outcome: Outcome::Rejected,
            progressed: false,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ScenarioEvent {
    TriggerFired { trigger: TriggerKind },
    PhaseChanged { from: TaskPhase, to: TaskPhase },
    VitalsChanged { vitals: PatientVitals },
    CountdownDeducted { amount_ms: i64, remaining_ms: i64 },
    CountdownExpired,
    LightingChanged { lighting: Lighting },
    AlarmEscalated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    Completed,
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
struct Fired {
    t1a: bool,
    t1b: bool,
    t1c: bool,
    t2: bool,
    t3: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    config: ScenarioConfig,
    t2_at_ms: Option<i64>,
    now_ms: i64,
    phase: TaskPhase,
    step: Option<ProcedureStep>,
    layers_cut: usize,
    scissors_missing: bool,
    forceps_contaminated: bool,
    vitals: PatientVitals,
    lighting: Lighting,
    alarm_escalated: bool,
    wound_opened_at_ms: Option<i64>,
    deducted_ms: i64,
    fired: Fired,
    expired_at_ms: Option<i64>,
    done_at_ms: Option<i64>,
    critical_errors: u32,
    completed_steps: Vec<ProcedureStep>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let t2_at_ms = config.triggers.t2.then(|| match config.triggers.t2_timing {
            T2Timing::Fixed { at_ms } => at_ms,
            T2Timing::Random { min_ms, max_ms } => {
                let span = (max_ms - min_ms) as u64 + 1;
                min_ms + (mix(seed ^ 0x7432_5f74_696d_6531) % span) as i64
            }
        });
        Ok(Self {
            config,
            t2_at_ms,
            now_ms: 0,
            phase: TaskPhase::Preparation,
            step: Some(ProcedureStep::CallForHelp),
            layers_cut: 0,
            scissors_missing: false,
            forceps_contaminated: false,
            vitals: config.initial_vitals,
            lighting: Lighting::Normal,
            alarm_escalated: false,
            wound_opened_at_ms: None,
            deducted_ms: 0,
            fired: Fired::default(),
            expired_at_ms: None,
            done_at_ms: None,
            critical_errors: 0,
            completed_steps: Vec::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn phase(&self) -> TaskPhase {
        self.phase
    }

    pub fn current_step(&self) -> Option<ProcedureStep> {
        self.step
    }

    pub fn completed_steps(&self) -> &[ProcedureStep] {
        &self.completed_steps
    }

    pub fn vitals(&self) -> PatientVitals {
        self.vitals
    }

    pub fn lighting(&self) -> Lighting {
        self.lighting
    }

    pub fn alarm_escalated(&self) -> bool {
        self.alarm_escalated
    }

    pub fn now_ms(&self) -> i64 {
        self.now_ms
    }

    pub fn t2_at_ms(&self) -> Option<i64> {
        self.t2_at_ms
    }

    pub fn deducted_ms(&self) -> i64 {
        self.deducted_ms
    }

    pub fn critical_errors(&self) -> u32 {
        self.critical_errors
    }

    pub fn done_at_ms(&self) -> Option<i64> {
        self.done_at_ms
    }

    pub fn expired_at_ms(&self) -> Option<i64> {
        self.expired_at_ms
    }

    pub fn is_done(&self) -> bool {
        self.phase == TaskPhase::Done
    }

    pub fn has_fired(&self, kind: TriggerKind) -> bool {
        match kind {
            TriggerKind::T1a => self.fired.t1a,
            TriggerKind::T1b => self.fired.t1b,
            TriggerKind::T1c => self.fired.t1c,
            TriggerKind::T2 => self.fired.t2,
            TriggerKind::T3 => self.fired.t3,
        }
    }

    /// Countdown at `t_ms`, floored at zero.
    pub fn remaining_at(&self, t_ms: i64) -> i64 {
        (self.config.initial_countdown_ms - t_ms - self.deducted_ms).max(0)
    }

    pub fn remaining_ms(&self) -> i64 {
        self.remaining_at(self.now_ms)
    }

    /// Fire time-driven triggers and detect expiry. Time never runs backwards.
    pub fn tick(&mut self, now_ms: i64) -> Vec<ScenarioEvent> {
        let mut ev = Vec::new();
        self.now_ms = self.now_ms.max(now_ms);
        if self.is_done() {
            return ev;
        }
        if let Some(at) = self.t2_at_ms {
            if !self.fired.t2 && self.now_ms >= at {
                self.fire_t2(&mut ev);
            }
        }
        if self.config.triggers.t1c && !self.fired.t1c && self.phase == TaskPhase::WoundOpening {
            if let Some(opened) = self.wound_opened_at_ms {
                if self.now_ms >= opened + self.config.triggers.t1c_delay_ms {
                    self.fired.t1c = true;
                    self.lighting = Lighting::Degraded;
                    ev.push(ScenarioEvent::TriggerFired { trigger: TriggerKind::T1c });
                    ev.push(ScenarioEvent::LightingChanged { lighting: Lighting::Degraded });
                }
            }
        }
        if self.expired_at_ms.is_none() && self.remaining_ms() == 0 {
            self.expired_at_ms = Some(self.now_ms);
            ev.push(ScenarioEvent::CountdownExpired);
        }
        ev
    }

    fn fire_t2(&mut self, ev: &mut Vec<ScenarioEvent>) {
        let t = &self.config.triggers;
        self.fired.t2 = true;
        self.vitals = t.t2_vitals;
        self.alarm_escalated = true;
        let amount = t.t2_deduction_ms.min(self.remaining_ms());
        self.deducted_ms += amount;
        ev.push(ScenarioEvent::TriggerFired { trigger: TriggerKind::T2 });
        ev.push(ScenarioEvent::VitalsChanged { vitals: self.vitals });
        ev.push(ScenarioEvent::AlarmEscalated);
        ev.push(ScenarioEvent::CountdownDeducted {
            amount_ms: amount,
            remaining_ms: self.remaining_ms(),
        });
    }

    /// Actions that complete the current step.
    pub fn expected_actions(&self) -> Vec<Action> {
        use ProcedureStep::*;
        match self.step {
            None => vec![],
            Some(CallForHelp) | Some(ReportStatus) => vec![Action::PressCallBell],
            Some(ArrangeDrapes) => vec![Action::ArrangeDrapes],
            Some(RemoveSteriStrips) => vec![Action::RemoveSteriStrips],
            Some(FetchScissors) => vec![Action::FetchScissorsFromSupply],
            Some(Cut(layer)) => vec![Action::CutSutures { layer }],
            Some(RemoveClot) => vec![
                Action::RemoveClot { tool: ClotTool::Forceps },
                Action::RemoveClot { tool: ClotTool::Manual },
            ],
            Some(ReplaceForceps) => vec![
                Action::FetchSterileForceps,
                Action::RemoveClot { tool: ClotTool::Manual },
            ],
            Some(CheckMonitor) => vec![Action::CheckMonitor],
            Some(RequestAnesthesia) => vec![Action::RequestAnesthesia],
            Some(PrepareIntubation) => vec![Action::PrepareIntubationKit],
            Some(BriefTeam) => vec![Action::BriefTeam],
        }
    }

    /// Outcome the action would have, without mutating the scenario.
    pub fn classify(&self, action: Action) -> Outcome {
        self.clone()
            .advance(&ActionEvent {
                t_ms: self.now_ms,
                action,
            })
            .0
            .outcome
    }

    /// Actions that would be recorded as critical errors right now.
    pub fn critical_error_candidates(&self) -> Vec<Action> {
        Action::ALL
            .into_iter()
            .filter(|&a| self.classify(a) == Outcome::CriticalError)
            .collect()
    }

    /// Apply one trainee action at `ev.t_ms`. Call [`Scenario::tick`] first
    /// so time-driven triggers at that instant take effect.
    pub fn advance(&mut self, ev: &ActionEvent) -> (ActionResult, Vec<ScenarioEvent>) {
        let mut events = Vec::new();
        self.now_ms = self.now_ms.max(ev.t_ms);
        if self.is_done() {
            return (ActionResult::rejected("scenario complete"), events);
        }
        if self.remaining_ms() == 0 && !self.config.continue_after_expiry {
            return (ActionResult::rejected("session expired"), events);
        }
        let result = self.apply(ev.action, &mut events);
        if result.outcome == Outcome::CriticalError {
            self.critical_errors += 1;
        }
        (result, events)
    }

    fn apply(&mut self, action: Action, ev: &mut Vec<ScenarioEvent>) -> ActionResult {
        use ProcedureStep as S;
        let step = match self.step {
            Some(s) => s,
            None => return ActionResult::rejected("scenario complete"),
        };

        // Instrument and environment handling that overrides step matching.
        match action {
            Action::ActivateAltLight => {
                if self.lighting == Lighting::Degraded {
                    self.lighting = Lighting::Normal;
                    ev.push(ScenarioEvent::LightingChanged { lighting: Lighting::Normal });
                }
                return ActionResult::accepted(false);
            }
            Action::CutSutures { .. } if step.phase() == TaskPhase::WoundOpening && step != S::RemoveSteriStrips => {
                if self.config.triggers.t1a && !self.fired.t1a {
                    self.fired.t1a = true;
                    self.scissors_missing = true;
                    self.step = Some(S::FetchScissors);
                    ev.push(ScenarioEvent::TriggerFired { trigger: TriggerKind::T1a });
                    return ActionResult::rejected("instrument unavailable: scissors");
                }
                if self.scissors_missing {
                    return ActionResult::rejected("instrument unavailable: scissors");
                }
            }
            Action::RemoveClot { tool: ClotTool::Forceps } if step.phase() == TaskPhase::ClotRemoving => {
                if self.forceps_contaminated {
                    return ActionResult::error("contaminated forceps used");
                }
                if self.config.triggers.t1b && !self.fired.t1b {
                    self.fired.t1b = true;
                    self.forceps_contaminated = true;
                    self.step = Some(S::ReplaceForceps);
                    ev.push(ScenarioEvent::TriggerFired { trigger: TriggerKind::T1b });
                    return ActionResult::rejected("instrument dropped: forceps contaminated");
                }
            }
            _ => {}
        }

        if !self.expected_actions().contains(&action) {
            return if self.is_neutral(action) {
                ActionResult::accepted(false)
            } else {
                ActionResult::error(match step.phase() {
                    TaskPhase::WoundOpening if matches!(action, Action::CutSutures { .. }) => {
                        "suture layers out of order"
                    }
                    _ => "step out of order",
                })
            };
        }

        self.completed_steps.push(step);
        let next = match step {
            S::CallForHelp => Some(S::ArrangeDrapes),
            S::ArrangeDrapes => Some(S::RemoveSteriStrips),
            S::RemoveSteriStrips => Some(S::Cut(SutureLayer::Subcuticular)),
            S::FetchScissors => {
                self.scissors_missing = false;
                Some(S::Cut(SutureLayer::ORDER[self.layers_cut]))
            }
            S::Cut(_) => {
                self.layers_cut += 1;
                SutureLayer::ORDER.get(self.layers_cut).map(|&l| S::Cut(l)).or(Some(S::RemoveClot))
            }
            S::ReplaceForceps if action == Action::FetchSterileForceps => {
                self.forceps_contaminated = false;
                Some(S::RemoveClot)
            }
            S::RemoveClot | S::ReplaceForceps => {
                self.clot_removed(ev);
                Some(S::CheckMonitor)
            }
            S::CheckMonitor => Some(if self.vitals.is_unstable() {
                S::RequestAnesthesia
            } else {
                S::ReportStatus
            }),
            S::RequestAnesthesia => Some(S::PrepareIntubation),
            S::PrepareIntubation => Some(S::BriefTeam),
            S::ReportStatus | S::BriefTeam => None,
        };
        self.set_step(next, ev);
        ActionResult::accepted(true)
    }

    fn clot_removed(&mut self, ev: &mut Vec<ScenarioEvent>) {
        if self.config.triggers.t3 {
            self.fired.t3 = true;
            ev.push(ScenarioEvent::TriggerFired { trigger: TriggerKind::T3 });
            if !self.vitals.is_unstable() {
                self.vitals = self.config.triggers.t2_vitals;
                ev.push(ScenarioEvent::VitalsChanged { vitals: self.vitals });
            }
        } else if self.vitals != self.config.recovered_vitals {
            self.vitals = self.config.recovered_vitals;
            ev.push(ScenarioEvent::VitalsChanged { vitals: self.vitals });
        }
    }

    fn set_step(&mut self, next: Option<ProcedureStep>, ev: &mut Vec<ScenarioEvent>) {
        let to = next.map_or(TaskPhase::Done, ProcedureStep::phase);
        if to != self.phase {
            ev.push(ScenarioEvent::PhaseChanged { from: self.phase, to });
            if to == TaskPhase::WoundOpening {
                self.wound_opened_at_ms = Some(self.now_ms);
            }
            if to == TaskPhase::Done {
                self.done_at_ms = Some(self.now_ms);
            }
            self.phase = to;
        }
        self.step = next;
    }

    /// Accepted without progress and without counting as an error.
    fn is_neutral(&self, action: Action) -> bool {
        match action {
            Action::ActivateAltLight => true,
            Action::CheckMonitor => true,
            Action::FetchScissorsFromSupply => !self.scissors_missing,
            Action::FetchSterileForceps => !self.forceps_contaminated,
            _ => false,
        }
    }

    pub fn completion(&self) -> Completion {
        match (self.done_at_ms, self.expired_at_ms) {
            (Some(done), Some(exp)) if done < exp => Completion::Completed,
            (Some(done), None) if self.remaining_at(done) > 0 => Completion::Completed,
            _ => Completion::Incomplete,
        }
    }
}

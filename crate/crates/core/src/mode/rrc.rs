//! Abstract RRC connection state machine with the TR-mode states.
//!
//! `RRC_AM_TR` is the transition state entered when TR mode is identified;
//! `RRC_EE` is the low-activity state that keeps the connection up for
//! downlink NAS and information transfer. The TR flag is set exactly while
//! the machine is in one of those two states.

use std::fmt;

use crate::channel::{duplex_links, Direction, Link, LinkSet};
use crate::error::{Error, Result};
use crate::mode::{allowed_applications, UeMode};
use crate::power::AppId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RrcPhase {
    Idle,
    Connected,
    AmTr,
    Ee,
}

impl fmt::Display for RrcPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RrcPhase::Idle => "RRC_IDLE",
            RrcPhase::Connected => "RRC_CONNECTED",
            RrcPhase::AmTr => "RRC_AM_TR",
            RrcPhase::Ee => "RRC_EE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferKind {
    Nas,
    App(AppId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RrcEvent {
    SetupRequest,
    SetupComplete,
    ModeIdentified(UeMode),
    /// Leaves the RRC_AM_TR transition state for RRC_EE.
    EnterLowActivity,
    SignalRecovered,
    Release,
    Transfer {
        direction: Direction,
        kind: TransferKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RrcState {
    pub phase: RrcPhase,
    /// TR-mode flag.
    pub flag: bool,
    /// Set between a setup request and its completion.
    pub setup_pending: bool,
    /// Flight mode: every transfer is suppressed.
    pub flight: bool,
    /// Keep A3 downlink open in TR (otherwise A3 is not served at all).
    pub a3_downlink: bool,
}

impl RrcState {
    pub fn idle(a3_downlink: bool) -> Self {
        Self {
            phase: RrcPhase::Idle,
            flag: false,
            setup_pending: false,
            flight: false,
            a3_downlink,
        }
    }

    fn at(self, phase: RrcPhase) -> Self {
        Self {
            phase,
            flag: matches!(phase, RrcPhase::AmTr | RrcPhase::Ee),
            setup_pending: false,
            ..self
        }
    }

    fn reject(&self, reason: impl Into<String>) -> Error {
        Error::Protocol {
            state: self.to_string(),
            reason: reason.into(),
        }
    }

    /// Mode implied by the current state.
    pub fn mode(&self) -> UeMode {
        if self.flight {
            UeMode::Flight
        } else if self.flag {
            UeMode::Thermal
        } else {
            UeMode::Active
        }
    }
}

impl fmt::Display for RrcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (flag={})", self.phase, u8::from(self.flag))?;
        if self.flight {
            f.write_str(" [flight]")?;
        }
        Ok(())
    }
}

/// Applies one event. Every `(phase, event)` pair is either a transition or
/// an explicit protocol-violation error.
pub fn transition(state: RrcState, event: RrcEvent) -> Result<RrcState> {
    use RrcEvent::*;
    use RrcPhase::*;

    if state.flight {
        return match event {
            ModeIdentified(UeMode::Active) => Ok(RrcState {
                flight: false,
                ..state.at(Idle)
            }),
            ModeIdentified(UeMode::Flight) => Ok(state),
            _ => Err(state.reject("flight mode suppresses all transfer and signalling")),
        };
    }

    match (state.phase, event) {
        (_, ModeIdentified(UeMode::Flight)) => Ok(RrcState {
            flight: true,
            ..state.at(Idle)
        }),

        (Idle, SetupRequest) if !state.setup_pending => Ok(RrcState {
            setup_pending: true,
            ..state
        }),
        (Idle, SetupRequest) => Err(state.reject("setup already requested")),
        (Idle, SetupComplete) if state.setup_pending => Ok(state.at(Connected)),
        (Idle, SetupComplete) => Err(state.reject("setup complete without request")),
        (Idle, ModeIdentified(_)) => Err(state.reject("mode identification requires a connection")),
        (Idle, EnterLowActivity) => Err(state.reject("not in RRC_AM_TR")),
        (Idle, SignalRecovered) => Err(state.reject("not in TR mode")),
        (Idle, Release) => Err(state.reject("nothing to release")),
        (Idle, Transfer { .. }) => Err(state.reject("no connection")),

        (Connected | AmTr | Ee, SetupRequest | SetupComplete) => {
            Err(state.reject("already connected"))
        }
        (Connected | AmTr | Ee, Release) => Ok(state.at(Idle)),

        (Connected, ModeIdentified(UeMode::Active)) => Ok(state),
        (Connected, ModeIdentified(UeMode::Thermal)) => Ok(state.at(AmTr)),
        (Connected, EnterLowActivity) => Err(state.reject("not in RRC_AM_TR")),
        (Connected, SignalRecovered) => Err(state.reject("not in TR mode")),
        (Connected, Transfer { .. }) => Ok(state),

        (AmTr, ModeIdentified(UeMode::Thermal)) | (Ee, ModeIdentified(UeMode::Thermal)) => Ok(state),
        (AmTr | Ee, ModeIdentified(UeMode::Active)) => {
            Err(state.reject("leaving TR mode requires signal recovery"))
        }
        (AmTr, EnterLowActivity) => Ok(state.at(Ee)),
        (Ee, EnterLowActivity) => Ok(state),
        (AmTr | Ee, SignalRecovered) => Ok(state.at(Connected)),
        (AmTr | Ee, Transfer { direction, kind }) => {
            match (direction, kind) {
                (Direction::Uplink, TransferKind::Nas) => {
                    Err(state.reject("uplink transmissions are suspended"))
                }
                (Direction::Downlink, TransferKind::Nas) => Ok(state),
                (Direction::Downlink, TransferKind::App(AppId::A3)) if state.a3_downlink => Ok(state),
                (_, TransferKind::App(app)) if allowed_applications(UeMode::Thermal).contains(&app) => {
                    Ok(state)
                }
                (_, TransferKind::App(app)) => Err(state.reject(format!(
                    "{} is not served in TR mode",
                    app.label()
                ))),
            }
        }
    }
}

/// Links the handset keeps open in this state for the demanded applications.
pub fn emitted_links(state: &RrcState, demand: &[AppId]) -> LinkSet {
    match (state.flight, state.phase) {
        (true, _) | (false, RrcPhase::Idle) => LinkSet::new(),
        (false, RrcPhase::Connected) => duplex_links(demand.iter().copied()),
        (false, RrcPhase::AmTr | RrcPhase::Ee) => {
            let served = allowed_applications(UeMode::Thermal);
            let mut links = duplex_links(demand.iter().copied().filter(|a| served.contains(a)));
            if state.a3_downlink && demand.contains(&AppId::A3) {
                links.insert(Link { app: AppId::A3, direction: Direction::Downlink });
            }
            links
        }
    }
}

/// NAS signalling directions active in this state.
pub fn emitted_nas(state: &RrcState) -> Vec<Direction> {
    match (state.flight, state.phase) {
        (true, _) | (false, RrcPhase::Idle) => vec![],
        (false, RrcPhase::Connected) => vec![Direction::Uplink, Direction::Downlink],
        (false, RrcPhase::AmTr | RrcPhase::Ee) => vec![Direction::Downlink],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn connected() -> RrcState {
        let s = transition(RrcState::idle(false), RrcEvent::SetupRequest).unwrap();
        transition(s, RrcEvent::SetupComplete).unwrap()
    }

    fn all_events() -> Vec<RrcEvent> {
        let mut v = vec![
            RrcEvent::SetupRequest,
            RrcEvent::SetupComplete,
            RrcEvent::EnterLowActivity,
            RrcEvent::SignalRecovered,
            RrcEvent::Release,
        ];
        for m in [UeMode::Active, UeMode::Thermal, UeMode::Flight] {
            v.push(RrcEvent::ModeIdentified(m));
        }
        for direction in [Direction::Uplink, Direction::Downlink] {
            v.push(RrcEvent::Transfer { direction, kind: TransferKind::Nas });
            for app in AppId::ALL {
                v.push(RrcEvent::Transfer { direction, kind: TransferKind::App(app) });
            }
        }
        v
    }

    fn all_states() -> Vec<RrcState> {
        let mut v = vec![];
        for phase in [RrcPhase::Idle, RrcPhase::Connected, RrcPhase::AmTr, RrcPhase::Ee] {
            for flight in [false, true] {
                for a3_downlink in [false, true] {
                    for setup_pending in [false, true] {
                        v.push(RrcState {
                            phase,
                            flag: matches!(phase, RrcPhase::AmTr | RrcPhase::Ee),
                            setup_pending,
                            flight,
                            a3_downlink,
                        });
                    }
                }
            }
        }
        v
    }

    #[test]
    fn setup_path() {
        let s = connected();
        assert_eq!(s.phase, RrcPhase::Connected);
        assert!(!s.flag);
        assert!(transition(RrcState::idle(false), RrcEvent::SetupComplete).is_err());
    }

    #[test]
    fn tr_routing() {
        let s = transition(connected(), RrcEvent::ModeIdentified(UeMode::Thermal)).unwrap();
        assert_eq!(s.phase, RrcPhase::AmTr);
        assert!(s.flag);
        let s = transition(s, RrcEvent::EnterLowActivity).unwrap();
        assert_eq!(s.phase, RrcPhase::Ee);
        assert!(s.flag);
        assert_eq!(s.mode(), UeMode::Thermal);

        let ul = RrcEvent::Transfer { direction: Direction::Uplink, kind: TransferKind::Nas };
        let err = transition(s, ul).unwrap_err();
        assert!(err.to_string().contains("uplink transmissions are suspended"));

        let dl = RrcEvent::Transfer { direction: Direction::Downlink, kind: TransferKind::Nas };
        assert_eq!(transition(s, dl).unwrap(), s);

        let back = transition(s, RrcEvent::SignalRecovered).unwrap();
        assert_eq!(back.phase, RrcPhase::Connected);
        assert!(!back.flag);
    }

    #[test]
    fn flight_suppresses_everything() {
        let s = transition(connected(), RrcEvent::ModeIdentified(UeMode::Flight)).unwrap();
        assert_eq!(s.mode(), UeMode::Flight);
        for e in all_events() {
            if matches!(e, RrcEvent::ModeIdentified(UeMode::Active | UeMode::Flight)) {
                continue;
            }
            assert!(transition(s, e).is_err(), "{e:?}");
        }
        assert!(emitted_links(&s, &AppId::ALL).is_empty());
        assert!(emitted_nas(&s).is_empty());
        let s = transition(s, RrcEvent::ModeIdentified(UeMode::Active)).unwrap();
        assert_eq!(s.phase, RrcPhase::Idle);
        assert!(!s.flight);
    }

    #[test]
    fn machine_is_total_and_flag_consistent() {
        for s in all_states() {
            for e in all_events() {
                // every pair returns a definite answer; no panic, no silent default
                if let Ok(next) = transition(s, e) {
                    assert_eq!(
                        next.flag,
                        matches!(next.phase, RrcPhase::AmTr | RrcPhase::Ee),
                        "{s} --{e:?}--> {next}"
                    );
                }
            }
        }
    }

    #[test]
    fn tr_states_never_emit_a3_or_uplink_nas() {
        for s in all_states().into_iter().filter(|s| s.flag) {
            let links = emitted_links(&s, &AppId::ALL);
            assert!(!links.iter().any(|l| l.app == AppId::A3 && l.direction == Direction::Uplink));
            if !s.a3_downlink {
                assert!(!links.iter().any(|l| l.app == AppId::A3));
            }
            assert!(!emitted_nas(&s).contains(&Direction::Uplink));
        }
    }

    #[test]
    fn a3_downlink_switch() {
        let mut s = transition(connected(), RrcEvent::ModeIdentified(UeMode::Thermal)).unwrap();
        let dl3 = RrcEvent::Transfer { direction: Direction::Downlink, kind: TransferKind::App(AppId::A3) };
        assert!(transition(s, dl3).is_err());
        assert_eq!(emitted_links(&s, &AppId::ALL).len(), 4);
        s.a3_downlink = true;
        assert!(transition(s, dl3).is_ok());
        assert_eq!(emitted_links(&s, &AppId::ALL).len(), 5);
    }
}

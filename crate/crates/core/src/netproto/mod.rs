//! Zone channel allocation, coordinated forwarding backoff, the MN channel
//! access/switch state machine and the shared-medium collision model.

mod backoff;
mod channel;
mod link;
mod medium;

pub use backoff::{backoff_schedule, check as check_backoff, BackoffSchedule};
pub use channel::{allocate_channels, ChannelId, ChannelPlan};
pub use link::{
    apply_switch, begin_switch, complete_switch, evaluate_switch, link_lost, scan_and_access, transition, LinkEvent,
    LinkMode, MnLinkState, SwitchDecision, SwitchParams,
};
pub use medium::{frame_delivery, frames_overlap, resolve_collisions, Frame};

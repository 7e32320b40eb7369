//! Byte-exact size model for UDP DNS responses carrying A records, used to
//! bound how many addresses fit in one non-fragmented reply.
//!
//! Layout assumptions, stated so the bound is auditable: the question name
//! is wire-encoded once and every A record refers back to it through a
//! 2-byte compression pointer (16 bytes per record); EDNS adds a single
//! 11-byte OPT record with a root owner name. IPv4 answers only.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const DNS_HEADER_BYTES: u32 = 12;
/// 2 name pointer + 2 type + 2 class + 4 ttl + 2 rdlength + 4 rdata.
pub const A_RECORD_BYTES: u32 = 16;
/// 1 root name + 2 type + 2 udp-size + 4 flags + 2 rdlength.
pub const OPT_RECORD_BYTES: u32 = 11;
/// Maximum UDP message size without EDNS.
pub const CLASSIC_UDP_LIMIT: u32 = 512;
pub const DEFAULT_IP_HEADER_BYTES: u32 = 20;
pub const DEFAULT_UDP_HEADER_BYTES: u32 = 8;
pub const DEFAULT_MTU: u32 = 1500;
pub const DEFAULT_QNAME: &str = "pool.ntp.org";

/// Link and encoding parameters for the size bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireParams {
    pub mtu: u32,
    pub qname: String,
    pub edns: bool,
    #[serde(default = "default_ip_header")]
    pub ip_header: u32,
    #[serde(default = "default_udp_header")]
    pub udp_header: u32,
}

fn default_ip_header() -> u32 {
    DEFAULT_IP_HEADER_BYTES
}

fn default_udp_header() -> u32 {
    DEFAULT_UDP_HEADER_BYTES
}

impl WireParams {
    pub fn new(mtu: u32, qname: &str, edns: bool) -> Self {
        WireParams {
            mtu,
            qname: qname.to_owned(),
            edns,
            ip_header: DEFAULT_IP_HEADER_BYTES,
            udp_header: DEFAULT_UDP_HEADER_BYTES,
        }
    }

    /// UDP payload bytes available under this MTU.
    pub fn payload_budget(&self) -> u32 {
        self.mtu.saturating_sub(self.ip_header + self.udp_header)
    }
}

impl Default for WireParams {
    fn default() -> Self {
        WireParams::new(DEFAULT_MTU, DEFAULT_QNAME, true)
    }
}

/// Wire length of a dotted name: one length byte per label plus the root
/// terminator. Labels are capped at 63 bytes and the whole name at 255.
fn encoded_name_len(qname: &str) -> Result<u32> {
    if qname.is_empty() {
        return Err(SimError::InvalidQname("empty name".into()));
    }
    let mut total = 1u32;
    for label in qname.split('.') {
        if label.is_empty() {
            return Err(SimError::InvalidQname(format!("empty label in {qname:?}")));
        }
        if label.len() > 63 {
            return Err(SimError::InvalidQname(format!(
                "label longer than 63 bytes in {qname:?}"
            )));
        }
        total += 1 + label.len() as u32;
    }
    if total > 255 {
        return Err(SimError::InvalidQname(format!(
            "name {qname:?} exceeds 255 bytes on the wire"
        )));
    }
    Ok(total)
}

/// Byte length of a response message with `n_records` A answers for `qname`.
pub fn encoded_size(qname: &str, n_records: u32, edns: bool) -> Result<u32> {
    let question = encoded_name_len(qname)? + 4;
    let opt = if edns { OPT_RECORD_BYTES } else { 0 };
    Ok(DNS_HEADER_BYTES + question + opt + A_RECORD_BYTES * n_records)
}

/// Largest A-record count whose message still fits the UDP payload budget.
/// Without EDNS the message is additionally capped at the classic 512-byte
/// UDP limit.
pub fn max_a_records(params: &WireParams) -> Result<u32> {
    let budget = params.payload_budget();
    let cap = if params.edns {
        budget
    } else {
        budget.min(CLASSIC_UDP_LIMIT)
    };
    let base = encoded_size(&params.qname, 0, params.edns)?;
    if cap < base {
        return Err(SimError::WireBudgetTooSmall {
            budget: cap,
            minimum: base,
        });
    }
    Ok((cap - base) / A_RECORD_BYTES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_response_sizes() {
        assert_eq!(encoded_size("pool.ntp.org", 0, false).unwrap(), 30);
        assert_eq!(encoded_size("pool.ntp.org", 0, true).unwrap(), 41);
    }

    #[test]
    fn each_record_adds_sixteen_bytes() {
        assert_eq!(encoded_size("pool.ntp.org", 1, false).unwrap(), 46);
        assert_eq!(encoded_size("pool.ntp.org", 89, true).unwrap(), 1465);
        assert_eq!(encoded_size("pool.ntp.org", 90, true).unwrap(), 1481);
    }

    #[test]
    fn ethernet_mtu_with_edns_fits_89_records() {
        let params = WireParams::new(1500, "pool.ntp.org", true);
        assert_eq!(params.payload_budget(), 1472);
        assert_eq!(max_a_records(&params).unwrap(), 89);
    }

    #[test]
    fn classic_limit_without_edns_fits_30_records() {
        let params = WireParams::new(1500, "pool.ntp.org", false);
        assert_eq!(max_a_records(&params).unwrap(), 30);
        // Any MTU >= 576 hits the 512-byte cap first, not the link budget.
        let params = WireParams::new(9000, "pool.ntp.org", false);
        assert_eq!(max_a_records(&params).unwrap(), 30);
    }

    #[test]
    fn small_mtu_with_edns_fits_29_records() {
        let params = WireParams::new(548, "pool.ntp.org", true);
        assert_eq!(max_a_records(&params).unwrap(), 29);
    }

    #[test]
    fn budget_below_empty_message_is_an_error() {
        let params = WireParams::new(60, "pool.ntp.org", true);
        assert!(matches!(
            max_a_records(&params),
            Err(SimError::WireBudgetTooSmall { .. })
        ));
    }

    #[test]
    fn invalid_qnames_are_rejected() {
        assert!(matches!(
            encoded_size("", 0, false),
            Err(SimError::InvalidQname(_))
        ));
        assert!(matches!(
            encoded_size("pool..org", 0, false),
            Err(SimError::InvalidQname(_))
        ));
        let long_label = format!("{}.org", "a".repeat(64));
        assert!(matches!(
            encoded_size(&long_label, 0, false),
            Err(SimError::InvalidQname(_))
        ));
        let long_name = std::iter::repeat_n("label", 50).collect::<Vec<_>>().join(".");
        assert!(matches!(
            encoded_size(&long_name, 0, false),
            Err(SimError::InvalidQname(_))
        ));
    }

    /// Brute-force maximum: keep adding records until the message no longer
    /// fits. Independent of the closed-form division in `max_a_records`.
    fn brute_force_max(params: &WireParams) -> Result<u32> {
        let budget = params.payload_budget();
        let cap = if params.edns {
            budget
        } else {
            budget.min(CLASSIC_UDP_LIMIT)
        };
        if cap < encoded_size(&params.qname, 0, params.edns)? {
            return Err(SimError::WireBudgetTooSmall {
                budget: cap,
                minimum: encoded_size(&params.qname, 0, params.edns)?,
            });
        }
        let mut n = 0;
        while encoded_size(&params.qname, n + 1, params.edns)? <= cap {
            n += 1;
        }
        Ok(n)
    }

    #[test]
    fn closed_form_matches_brute_force_across_mtus() {
        for mtu in (100..=9000).step_by(37) {
            for edns in [false, true] {
                let params = WireParams::new(mtu, "pool.ntp.org", edns);
                assert_eq!(
                    max_a_records(&params),
                    brute_force_max(&params),
                    "mtu={mtu} edns={edns}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn size_grows_linearly_in_record_count(n in 0u32..2000) {
            let base = encoded_size("pool.ntp.org", n, true).unwrap();
            let next = encoded_size("pool.ntp.org", n + 1, true).unwrap();
            prop_assert_eq!(next - base, A_RECORD_BYTES);
        }

        #[test]
        fn valid_names_round_trip_through_the_size_model(
            labels in prop::collection::vec("[a-z0-9]{1,20}", 1..6),
            n in 0u32..100,
            edns in any::<bool>(),
        ) {
            let qname = labels.join(".");
            let size = encoded_size(&qname, n, edns).unwrap();
            let name_len = qname.len() as u32 + 2; // length bytes replace dots, plus root
            let expected = DNS_HEADER_BYTES + name_len + 4
                + if edns { OPT_RECORD_BYTES } else { 0 }
                + A_RECORD_BYTES * n;
            prop_assert_eq!(size, expected);
        }
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Banks: mats tiled into subarrays, subarrays tiled under an H-tree, and
//! the tag/data pairing of a cache.

use serde::{Deserialize, Serialize};

use crate::circuits::{peripheral_ppa, repeated_wire, PeripheralKind, PeripheralPPA, PeripheralParams, UnitInverter};
use crate::error::{Error, Result};
use crate::m3d::assemble_m3d_mat_with;
use crate::mat::{build_mat, MatDesign, MatPPA};
use crate::num::{is_pow2, log2_exact};
use crate::tech::{LayerUse, TechNode};

pub const DEFAULT_ADDRESS_BITS: usize = 48;
/// Valid and dirty.
pub const TAG_STATUS_BITS: usize = 2;
/// Share of subarray positions holding tags in a heterogeneous TAU bank.
pub const DEFAULT_TAU_CENTRAL_FRACTION: f64 = 0.25;
/// Extra write cycles of a heterogeneous TAU bank.
pub const TAU_HT_WRITE_PENALTY_CYCLES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankKind {
    Data,
    Tag,
    TauHm,
    TauHt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Normal,
    Sequential,
    Fast,
}

impl AccessMode {
    pub const ALL: [AccessMode; 3] = [AccessMode::Normal, AccessMode::Sequential, AccessMode::Fast];
}

impl BankKind {
    pub const ALL: [BankKind; 4] = [BankKind::Data, BankKind::Tag, BankKind::TauHm, BankKind::TauHt];

    pub fn is_tau(self) -> bool {
        matches!(self, BankKind::TauHm | BankKind::TauHt)
    }
}

text_enum!(AccessMode, "normal" => AccessMode::Normal, "sequential" => AccessMode::Sequential, "fast" => AccessMode::Fast);
text_enum!(BankKind, "data" => BankKind::Data, "tag" => BankKind::Tag, "tau_hm" => BankKind::TauHm, "tau_ht" => BankKind::TauHt);

/// Organization of one bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankOrg {
    pub kind: BankKind,
    pub n_sr: usize,
    pub n_sc: usize,
    pub n_asr: usize,
    pub n_asc: usize,
    /// Mats per subarray, rows by columns.
    pub mats_r: usize,
    pub mats_c: usize,
    /// Active mats per active subarray.
    pub n_amr: usize,
    pub n_amc: usize,
    pub associativity: usize,
    pub n_block: u64,
    pub w_block_data: usize,
    pub w_block_tag: usize,
    pub access_mode: AccessMode,
    pub ecc_ratio: f64,
    /// Data capacity of the cache this bank belongs to.
    pub capacity_bytes: u64,
}

/// Tag width for a physical address of `address_bits`, including status bits.
pub fn tag_bits(address_bits: usize, n_block: u64, associativity: usize, line_bytes: usize) -> Result<usize> {
    let sets = n_block / associativity.max(1) as u64;
    let set_bits = log2_exact(sets as usize).ok_or_else(|| Error::design(format!("set count {sets} is not a power of two")))?;
    let off_bits = log2_exact(line_bytes).ok_or_else(|| Error::design(format!("line size {line_bytes} is not a power of two")))?;
    let used = (set_bits + off_bits) as usize;
    if used >= address_bits {
        return Err(Error::design(format!("{address_bits} address bits leave no tag above {used} index/offset bits")));
    }
    Ok(address_bits - used + TAG_STATUS_BITS)
}

impl BankOrg {
    /// A data bank with one active subarray and the mat activation left
    /// to [`BankOrg::fit_active_mats`].
    pub fn data(
        capacity_bytes: u64,
        line_bytes: usize,
        associativity: usize,
        subarrays: (usize, usize),
        mats: (usize, usize),
        access_mode: AccessMode,
    ) -> Result<Self> {
        if capacity_bytes == 0 || line_bytes == 0 {
            return Err(Error::design("capacity and line size must be > 0"));
        }
        let n_block = capacity_bytes / line_bytes as u64;
        // Stored tags are padded to a power of two; spare bits hold
        // replacement state.
        let w_block_tag = tag_bits(DEFAULT_ADDRESS_BITS, n_block, associativity, line_bytes)?.next_power_of_two();
        Ok(BankOrg {
            kind: BankKind::Data,
            n_sr: subarrays.0,
            n_sc: subarrays.1,
            n_asr: 1,
            n_asc: 1,
            mats_r: mats.0,
            mats_c: mats.1,
            n_amr: 1,
            n_amc: 1,
            associativity,
            n_block,
            w_block_data: line_bytes * 8,
            w_block_tag,
            access_mode,
            ecc_ratio: 0.0,
            capacity_bytes,
        })
    }

    /// Recomputes the tag width for another physical address size.
    pub fn with_address_bits(mut self, address_bits: usize) -> Result<Self> {
        let line = self.w_block_data / 8;
        self.w_block_tag = tag_bits(address_bits, self.n_block, self.associativity, line)?.next_power_of_two();
        Ok(self)
    }

    pub fn with_ecc(mut self, ratio: f64) -> Self {
        self.ecc_ratio = ratio;
        self
    }

    pub fn with_active_subarrays(mut self, rows: usize, cols: usize) -> Self {
        self.n_asr = rows;
        self.n_asc = cols;
        self
    }

    /// The matching tag bank: same grid, one tag per block.
    pub fn tag_bank(&self) -> Self {
        BankOrg { kind: BankKind::Tag, ecc_ratio: 0.0, ..self.clone() }
    }

    pub fn as_kind(&self, kind: BankKind) -> Self {
        BankOrg { kind, ..self.clone() }
    }

    pub fn n_subarrays(&self) -> usize {
        self.n_sr * self.n_sc
    }

    pub fn mats_per_subarray(&self) -> usize {
        self.mats_r * self.mats_c
    }

    pub fn n_mats(&self) -> usize {
        self.n_subarrays() * self.mats_per_subarray()
    }

    /// Bits this bank stores.
    pub fn stored_bits(&self) -> u64 {
        match self.kind {
            BankKind::Tag => self.n_block * self.w_block_tag as u64,
            _ => self.capacity_bytes * 8,
        }
    }

    /// Data bits per mat implied by the grid.
    pub fn bits_per_mat(&self) -> u64 {
        self.stored_bits() / self.n_mats().max(1) as u64
    }

    /// Bits one access must pull out of the active mats.
    pub fn access_width(&self) -> usize {
        match self.kind {
            BankKind::Tag => self.w_block_tag * self.associativity,
            _ => self.w_block_data,
        }
    }

    /// Smallest power-of-two mat activation that delivers the access width,
    /// spreading over columns first.
    pub fn fit_active_mats(&mut self, mat_output_bits: usize) -> Result<()> {
        let per_sub = self.access_width().div_ceil(self.n_asr * self.n_asc).div_ceil(mat_output_bits.max(1));
        let need = per_sub.next_power_of_two();
        if need > self.mats_per_subarray() {
            return Err(Error::design(format!(
                "{} mats of {mat_output_bits} bits cannot deliver {} bits per access",
                self.mats_per_subarray(),
                self.access_width()
            )));
        }
        self.n_amc = need.min(self.mats_c);
        self.n_amr = need / self.n_amc;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = [
            ("subarray rows", self.n_sr),
            ("subarray columns", self.n_sc),
            ("active subarray rows", self.n_asr),
            ("active subarray columns", self.n_asc),
            ("mat rows per subarray", self.mats_r),
            ("mat columns per subarray", self.mats_c),
            ("active mat rows", self.n_amr),
            ("active mat columns", self.n_amc),
            ("associativity", self.associativity),
        ];
        for (what, n) in pow2 {
            if !is_pow2(n) {
                return Err(Error::design(format!("{what} must be a power of two >= 1, got {n}")));
            }
        }
        if !is_pow2(self.n_block as usize) {
            return Err(Error::design(format!("block count must be a power of two, got {}", self.n_block)));
        }
        if self.n_asr > self.n_sr || self.n_asc > self.n_sc {
            return Err(Error::design("more active subarrays than subarrays"));
        }
        if self.n_amr > self.mats_r || self.n_amc > self.mats_c {
            return Err(Error::design("more active mats than mats"));
        }
        if self.associativity as u64 > self.n_block {
            return Err(Error::design("associativity exceeds block count"));
        }
        if !(0.0..=1.0).contains(&self.ecc_ratio) {
            return Err(Error::design(format!("ECC ratio must be in [0, 1], got {}", self.ecc_ratio)));
        }
        if self.stored_bits() % self.n_mats() as u64 != 0 {
            return Err(Error::CapacityMismatch(self.stored_bits() / 8, 0));
        }
        Ok(())
    }
}

/// Global data line widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GdlWidths {
    pub n_aw: u64,
    pub n_bw: u64,
    pub n_dw: u64,
}

impl GdlWidths {
    pub fn total(&self) -> u64 {
        self.n_aw + self.n_bw + self.n_dw
    }
}

/// Address, broadcast and distributed wire counts per access mode and bank
/// kind. Data rows carry the block in the distributed wires; tag and TAU
/// rows list only address and distributed widths.
pub fn gdl_widths(org: &BankOrg) -> Result<GdlWidths> {
    let n = org.n_block;
    let a = org.associativity as u64;
    if !is_pow2(n as usize) || !is_pow2(a as usize) || a > n {
        return Err(Error::design(format!("block count {n} and associativity {a} must be powers of two with A <= N")));
    }
    let lg = |x: u64| x.trailing_zeros() as u64;
    let (wd, wt) = (org.w_block_data as u64, org.w_block_tag as u64);
    use AccessMode::*;
    use BankKind::*;
    let (n_aw, n_bw, n_dw) = match (org.access_mode, org.kind) {
        (Normal, Data) => (lg(n / a), lg(a), wd),
        (Sequential | Fast, Data) => (lg(n), 0, wd),
        (_, Tag) => (lg(n / a), 0, wt),
        (Normal, TauHm | TauHt) => (lg(n / a), 0, wt + 2),
        (Sequential, TauHm | TauHt) => (lg(n), 0, wt + 2),
        (Fast, TauHm | TauHt) => (lg(n / a), 0, wd * a + a),
    };
    Ok(GdlWidths { n_aw, n_bw, n_dw })
}

/// An H-tree over the subarray grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTree {
    /// Path delay to any leaf.
    pub delay_s: f64,
    /// Energy of the legs toward active subarrays, all bits switching.
    pub energy_j: f64,
    pub wire_area_um2: f64,
    pub repeater_area_um2: f64,
    pub leakage_w: f64,
    /// Leg length per level, root first.
    pub legs_um: Vec<f64>,
}

/// Routes `bits` wires from the bank centre to every subarray of a
/// `n_sr` x `n_sc` grid of `sub_w` x `sub_h` um subarrays.
pub fn route_htree(org: &BankOrg, sub_w: f64, sub_h: f64, bits: u64, tech: &TechNode) -> Result<HTree> {
    if !is_pow2(org.n_sr) || !is_pow2(org.n_sc) {
        return Err(Error::design("H-tree grid dimensions must be powers of two"));
    }
    let layer = tech.htree();
    let pitch_um = layer.pitch_nm * 1e-3;
    let b = bits as f64;
    let (mut c, mut r) = (org.n_sc, org.n_sr);
    let (mut ac, mut ar) = (org.n_asc, org.n_asr);
    let mut regions = 1usize;
    let mut active = 1usize;
    let mut out = HTree { delay_s: 0.0, energy_j: 0.0, wire_area_um2: 0.0, repeater_area_um2: 0.0, leakage_w: 0.0, legs_um: Vec::new() };
    while c > 1 || r > 1 {
        let horizontal = c > 1 && (c >= r || r == 1);
        let leg = if horizontal { c as f64 * sub_w / 4.0 } else { r as f64 * sub_h / 4.0 };
        let split_active = if horizontal { ac > 1 } else { ar > 1 };
        if horizontal {
            c /= 2;
            ac = ac.div_ceil(2);
        } else {
            r /= 2;
            ar = ar.div_ceil(2);
        }
        let w = repeated_wire(layer, leg, tech)?;
        let legs = 2 * regions;
        let active_legs = if split_active { 2 * active } else { active };
        out.delay_s += w.ppa.delay_s;
        out.energy_j += active_legs as f64 * b * w.ppa.dynamic_energy_j;
        out.wire_area_um2 += legs as f64 * b * leg * pitch_um;
        out.repeater_area_um2 += legs as f64 * b * w.ppa.area_um2;
        out.leakage_w += legs as f64 * b * w.ppa.leakage_w;
        out.legs_um.push(leg);
        regions *= 2;
        active = active_legs;
    }
    Ok(out)
}

/// One line of the component audit. Totals over `count` instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub count: u64,
    pub area_um2: f64,
    pub leakage_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefreshTiming {
    pub t_retention_s: f64,
    pub n_rows: usize,
    /// Time a mat is busy refreshing one row.
    pub t_row_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankPPA {
    pub kind: BankKind,
    pub access_mode: AccessMode,
    pub capacity_bytes: u64,
    pub area_mm2: f64,
    pub area_feol_mm2: f64,
    pub area_beol_mm2: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    pub tiers: usize,
    pub t_hit_s: f64,
    pub t_miss_detect_s: f64,
    pub t_write_s: f64,
    pub t_tag_s: f64,
    /// Control and H-tree part of the hit path; the rest is subarray time.
    pub t_routing_s: f64,
    pub t_subarray_s: f64,
    /// One crossing of the H-tree.
    pub t_broadcast_s: f64,
    pub e_hit_j: f64,
    pub e_miss_j: f64,
    pub e_write_j: f64,
    /// Refreshing one row in every mat.
    pub e_refresh_row_j: f64,
    pub leakage_w: f64,
    /// Subarray occupancy per read hit; bounds pipelined bandwidth.
    pub subarray_busy_s: f64,
    pub subarray_busy_write_s: f64,
    /// Cycles added to every write after quantization.
    pub write_penalty_cycles: u32,
    pub refresh: Option<RefreshTiming>,
    pub components: Vec<Component>,
}

impl BankPPA {
    /// Mb per mm^2.
    pub fn bit_density(&self) -> f64 {
        self.capacity_bytes as f64 * 8.0 / 1e6 / self.area_mm2
    }

    pub fn component_leakage_w(&self) -> f64 {
        self.components.iter().map(|c| c.leakage_w).sum()
    }

    /// Component audit as CSV.
    pub fn audit_csv(&self) -> String {
        let mut s = String::from("component,count,area_um2,leakage_w\n");
        for c in &self.components {
            s.push_str(&format!("{},{},{:.6e},{:.6e}\n", c.name, c.count, c.area_um2, c.leakage_w));
        }
        s
    }

    /// Read bandwidth bound of one subarray, accesses per second.
    pub fn subarray_bandwidth(&self) -> f64 {
        1.0 / self.subarray_busy_s
    }
}

/// Timing pieces of one bank before it is paired with tags.
#[derive(Debug, Clone, Copy)]
struct Paths {
    t_ctrl: f64,
    t_route: f64,
    t_sub_read: f64,
    t_sub_write: f64,
    e_read: f64,
    e_write: f64,
}

impl Paths {
    /// Data sits in the row buffer.
    fn t_ready(&self) -> f64 {
        self.t_ctrl + self.t_route + self.t_sub_read
    }

    fn t_read(&self) -> f64 {
        self.t_ready() + self.t_route
    }

    fn t_write(&self) -> f64 {
        self.t_ctrl + self.t_route + self.t_sub_write
    }
}

struct Body {
    ppa: BankPPA,
    paths: Paths,
}

fn check_mat(org: &BankOrg, mat: &MatPPA, mat_bits: u64) -> Result<()> {
    if mat_bits != org.bits_per_mat() || mat_bits * org.n_mats() as u64 != org.stored_bits() {
        return Err(Error::CapacityMismatch(org.stored_bits() / 8, mat_bits * org.n_mats() as u64 / 8));
    }
    let delivered = org.n_asr * org.n_asc * org.n_amr * org.n_amc * mat.output_bits;
    if delivered < org.access_width() {
        return Err(Error::design(format!(
            "active mats deliver {delivered} bits, access needs {}",
            org.access_width()
        )));
    }
    Ok(())
}

fn push(components: &mut Vec<Component>, name: &str, count: u64, each: &PeripheralPPA) {
    components.push(Component {
        name: name.to_string(),
        count,
        area_um2: each.area_um2 * count as f64,
        leakage_w: each.leakage_w * count as f64,
    });
}

/// Physical distributed width including check bits.
fn routed_bits(org: &BankOrg) -> Result<u64> {
    let g = gdl_widths(org)?;
    let ecc = (g.n_dw as f64 * org.ecc_ratio - 1e-9).ceil().max(0.0) as u64;
    Ok(g.total() + if org.kind == BankKind::Tag { 0 } else { ecc })
}

/// Subarrays of possibly different footprints; `sub_area` is the average
/// footprint and `sub_feol` the average front-end area inside it.
fn body(org: &BankOrg, mat: &MatPPA, sub_area_um2: f64, sub_feol_um2: f64, extra: Vec<Component>, tech: &TechNode) -> Result<Body> {
    org.validate()?;
    let u = UnitInverter::new(tech);
    let n_mats = org.n_mats() as u64;
    let n_sub = org.n_subarrays() as u64;
    let n_as = (org.n_asr * org.n_asc) as u64;
    let n_am = (org.n_amr * org.n_amc) as u64;

    // Inside a subarray: mat select and a local bus to the subarray port.
    let per_sub = org.mats_per_subarray();
    let predec = if per_sub > 1 {
        let bits = log2_exact(per_sub).unwrap_or(1) as usize;
        peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams::single(bits, 4.0 * u.c_in), tech)?
    } else {
        PeripheralPPA::ZERO
    };
    let tiled_w = org.mats_c as f64 * mat.width_um;
    let tiled_h = org.mats_r as f64 * mat.height_um;
    let aspect = tiled_w / tiled_h;
    let sub_w = (sub_area_um2 * aspect).sqrt();
    let sub_h = sub_area_um2 / sub_w;
    let local_len = 0.5 * (sub_w + sub_h) / if per_sub > 1 { 1.0 } else { 2.0 };
    let local = repeated_wire(tech.layer(LayerUse::Intermediate), local_len, tech)?;
    let mat_row_bits = log2_exact(org.bits_per_mat().max(1) as usize).unwrap_or(1) as u64;
    let local_bits = n_am * mat.output_bits as u64 + mat_row_bits;

    let bits = routed_bits(org)?;
    let htree = route_htree(org, sub_w, sub_h, bits, tech)?;

    let bank_aspect = aspect * org.n_sc as f64 / org.n_sr as f64;
    let core_um2 = n_sub as f64 * (sub_area_um2 + predec.area_um2 + local_bits as f64 * local.ppa.area_um2) + htree.repeater_area_um2;
    let edge = (core_um2 * bank_aspect).sqrt().max((core_um2 / bank_aspect).sqrt());
    let ctrl_dec_bits = log2_exact(org.n_subarrays()).unwrap_or(0).max(1) as usize;
    let ctrl_dec = peripheral_ppa(PeripheralKind::RowDecoder, &PeripheralParams::single(ctrl_dec_bits, 4.0 * u.c_in), tech)?;
    let ctrl_wire = repeated_wire(tech.layer(LayerUse::Global), 0.5 * edge, tech)?;
    // The control bus carries the set index in every mode; way bits ride
    // the H-tree with the rest of the address.
    let ctrl_bits = (org.n_block / org.associativity as u64).trailing_zeros().max(1) as u64;

    // The mat line covers the whole subarray tile so the audit sums to the
    // footprint.
    let mut components = vec![Component {
        name: "mats".into(),
        count: n_mats,
        area_um2: n_sub as f64 * sub_area_um2,
        leakage_w: mat.leakage_w * n_mats as f64,
    }];
    push(&mut components, "subarray_predecoder", n_sub, &predec);
    push(&mut components, "subarray_bus", n_sub * local_bits, &local.ppa);
    components.push(Component {
        name: "htree".into(),
        count: 1,
        area_um2: htree.repeater_area_um2,
        leakage_w: htree.leakage_w,
    });
    push(&mut components, "control_decoder", 1, &ctrl_dec);
    push(&mut components, "control_bus", ctrl_bits, &ctrl_wire.ppa);
    components.extend(extra);

    let area_um2: f64 = components.iter().map(|c| c.area_um2).sum();
    let leakage_w: f64 = components.iter().map(|c| c.leakage_w).sum();
    let beol_um2 = mat.area_beol_um2 * n_mats as f64;
    let feol_um2 = area_um2 - n_sub as f64 * (sub_area_um2 - sub_feol_um2);
    let width = (area_um2 * bank_aspect).sqrt();

    let t_ctrl = ctrl_dec.delay_s + ctrl_wire.ppa.delay_s;
    let t_local = predec.delay_s + local.ppa.delay_s;
    let e_fixed = ctrl_dec.dynamic_energy_j
        + ctrl_bits as f64 * ctrl_wire.ppa.dynamic_energy_j
        + htree.energy_j
        + n_as as f64 * (predec.dynamic_energy_j + local_bits as f64 * local.ppa.dynamic_energy_j);
    let paths = Paths {
        t_ctrl,
        t_route: htree.delay_s,
        t_sub_read: t_local + mat.t_read_s,
        t_sub_write: t_local + mat.t_write_s,
        e_read: e_fixed + (n_as * n_am) as f64 * mat.e_read_j,
        e_write: e_fixed + (n_as * n_am) as f64 * mat.e_write_j,
    };

    let refresh = mat.refresh.needs.then(|| RefreshTiming {
        t_retention_s: mat.refresh.t_retention_s,
        n_rows: mat.refresh.n_rows,
        t_row_s: mat.t_read_s + mat.t_write_s,
    });
    let ppa = BankPPA {
        kind: org.kind,
        access_mode: org.access_mode,
        capacity_bytes: org.capacity_bytes,
        area_mm2: area_um2 * 1e-6,
        area_feol_mm2: feol_um2 * 1e-6,
        area_beol_mm2: beol_um2 * 1e-6,
        width_mm: width * 1e-3,
        height_mm: area_um2 / width * 1e-3,
        tiers: mat.tiers,
        t_hit_s: paths.t_read(),
        t_miss_detect_s: paths.t_read(),
        t_write_s: paths.t_write(),
        t_tag_s: 0.0,
        t_routing_s: t_ctrl + 2.0 * htree.delay_s,
        t_subarray_s: paths.t_sub_read,
        t_broadcast_s: htree.delay_s,
        e_hit_j: paths.e_read,
        e_miss_j: paths.e_read,
        e_write_j: paths.e_write,
        e_refresh_row_j: mat.e_refresh_row_j * n_mats as f64,
        leakage_w,
        subarray_busy_s: paths.t_sub_read,
        subarray_busy_write_s: paths.t_sub_write,
        write_penalty_cycles: 0,
        refresh,
        components,
    };
    Ok(Body { ppa, paths })
}

/// Comparators for all ways of the active set.
fn comparators(org: &BankOrg, tech: &TechNode) -> Result<PeripheralPPA> {
    peripheral_ppa(
        PeripheralKind::Comparator,
        &PeripheralParams::single(org.w_block_tag, 4.0 * UnitInverter::new(tech).c_in),
        tech,
    )
}

fn mat_bits(design: &MatDesign) -> u64 {
    design.data_bits()
}

/// Builds a data or tag bank from identical mats.
pub fn build_bank(org: &BankOrg, design: &MatDesign, mat: &MatPPA, tech: &TechNode) -> Result<BankPPA> {
    if org.kind.is_tau() {
        return Err(Error::design("TAU banks are built with build_tau_bank"));
    }
    check_mat(org, mat, mat_bits(design))?;
    Ok(single(org, mat, tech)?.ppa)
}

fn single(org: &BankOrg, mat: &MatPPA, tech: &TechNode) -> Result<Body> {
    let per_sub = org.mats_per_subarray() as f64;
    let sub_area = per_sub * mat.footprint_um2();
    let sub_feol = per_sub * mat.area_feol_um2;
    let mut extra = Vec::new();
    let cmp = if org.kind == BankKind::Tag {
        let c = comparators(org, tech)?;
        // One comparator per way in every subarray.
        push(&mut extra, "tag_comparators", (org.n_subarrays() * org.associativity) as u64, &c);
        Some(c)
    } else {
        None
    };
    let mut b = body(org, mat, sub_area, sub_feol, extra, tech)?;
    if let Some(c) = cmp {
        let n_as = (org.n_asr * org.n_asc) as f64;
        b.paths.t_sub_read += c.delay_s;
        b.paths.e_read += n_as * org.associativity as f64 * c.dynamic_energy_j;
        let p = &mut b.ppa;
        p.t_subarray_s = b.paths.t_sub_read;
        p.subarray_busy_s = b.paths.t_sub_read;
        p.t_hit_s = b.paths.t_read();
        p.t_miss_detect_s = p.t_hit_s;
        p.t_tag_s = p.t_hit_s;
        p.e_hit_j = b.paths.e_read;
        p.e_miss_j = b.paths.e_read;
    }
    Ok(b)
}

fn merged_components(data: &BankPPA, tag: &BankPPA) -> Vec<Component> {
    let tagged = |prefix: &str, c: &Component| Component { name: format!("{prefix}.{}", c.name), ..c.clone() };
    data.components.iter().map(|c| tagged("data", c)).chain(tag.components.iter().map(|c| tagged("tag", c))).collect()
}

/// Pairs a data bank with a separate tag bank under the data bank's access
/// mode.
pub fn compose_cache(data: &BankPPA, tag: &BankPPA) -> Result<BankPPA> {
    if data.kind != BankKind::Data || tag.kind != BankKind::Tag {
        return Err(Error::design("compose_cache needs a data bank and a tag bank"));
    }
    if data.capacity_bytes != tag.capacity_bytes {
        return Err(Error::CapacityMismatch(data.capacity_bytes, tag.capacity_bytes));
    }
    let t_tag = tag.t_hit_s;
    let t_ready = data.t_hit_s - data.t_broadcast_s;
    let t_in = data.t_hit_s - data.t_subarray_s - 2.0 * data.t_broadcast_s;
    let (t_hit, e_hit, e_miss, busy) = match data.access_mode {
        AccessMode::Sequential => (t_tag + data.t_hit_s, tag.e_hit_j + data.e_hit_j, tag.e_hit_j, data.subarray_busy_s),
        AccessMode::Normal => {
            // The row buffer holds until the way select is broadcast back.
            let confirm = t_tag + data.t_broadcast_s;
            let hold = (confirm - (t_in + data.t_broadcast_s)).max(data.subarray_busy_s);
            (t_ready.max(confirm) + data.t_broadcast_s, tag.e_hit_j + data.e_hit_j, tag.e_hit_j + data.e_hit_j, hold)
        }
        AccessMode::Fast => (data.t_hit_s.max(t_tag), tag.e_hit_j + data.e_hit_j, tag.e_hit_j + data.e_hit_j, data.subarray_busy_s),
    };
    Ok(BankPPA {
        kind: BankKind::Data,
        access_mode: data.access_mode,
        capacity_bytes: data.capacity_bytes,
        area_mm2: data.area_mm2 + tag.area_mm2,
        area_feol_mm2: data.area_feol_mm2 + tag.area_feol_mm2,
        area_beol_mm2: data.area_beol_mm2 + tag.area_beol_mm2,
        width_mm: data.width_mm.max(tag.width_mm),
        height_mm: data.height_mm + tag.height_mm,
        tiers: data.tiers,
        t_hit_s: t_hit,
        t_miss_detect_s: t_tag,
        t_write_s: t_tag + data.t_write_s,
        t_tag_s: t_tag,
        t_routing_s: data.t_routing_s,
        t_subarray_s: data.t_subarray_s,
        t_broadcast_s: data.t_broadcast_s,
        e_hit_j: e_hit,
        e_miss_j: e_miss,
        e_write_j: tag.e_hit_j + data.e_write_j,
        e_refresh_row_j: data.e_refresh_row_j,
        leakage_w: data.leakage_w + tag.leakage_w,
        subarray_busy_s: busy,
        subarray_busy_write_s: data.subarray_busy_write_s,
        write_penalty_cycles: 0,
        refresh: data.refresh,
        components: merged_components(data, tag),
    })
}

/// Everything a TAU bank is made of.
#[derive(Debug, Clone)]
pub struct TauInputs<'a> {
    pub data_org: &'a BankOrg,
    pub data_design: &'a MatDesign,
    pub tag_design: &'a MatDesign,
    pub folds: usize,
    pub central_fraction: f64,
}

/// Tag bank mirroring the data grid, and its mat.
fn tag_side(inp: &TauInputs<'_>, tech: &TechNode) -> Result<(BankOrg, MatPPA)> {
    let mut tag_org = inp.data_org.tag_bank();
    if inp.tag_design.data_bits() != tag_org.bits_per_mat() {
        return Err(Error::CapacityMismatch(tag_org.stored_bits() / 8, inp.tag_design.data_bits() * tag_org.n_mats() as u64 / 8));
    }
    let tag_mat = build_mat(inp.tag_design, tech)?;
    tag_org.fit_active_mats(tag_mat.output_bits)?;
    Ok((tag_org, tag_mat))
}

/// Tag arrays placed in the FEOL under BEOL data arrays. HM places one tag
/// mat under every data mat; HT packs the tags under the central subarrays
/// and pays extra write cycles.
pub fn build_tau_bank(inp: &TauInputs<'_>, variant: BankKind, tech: &TechNode) -> Result<BankPPA> {
    if !variant.is_tau() {
        return Err(Error::design(format!("`{variant}` is not a TAU variant")));
    }
    if !inp.data_design.cell.is_beol {
        return Err(Error::design("TAU needs BEOL data cells"));
    }
    if inp.tag_design.cell.is_beol {
        return Err(Error::design("TAU tags are FEOL SRAM"));
    }
    let org = inp.data_org.as_kind(variant);
    let (tag_org, tag_mat) = tag_side(inp, tech)?;
    let (plain, _) = assemble_m3d_mat_with(inp.data_design, tech, inp.folds, 0.0)?;
    check_mat(inp.data_org, &plain, mat_bits(inp.data_design))?;
    let conventional = compose_cache(&single(inp.data_org, &plain, tech)?.ppa, &single(&tag_org, &tag_mat, tech)?.ppa)?;
    let cmp = comparators(&tag_org, tech)?;
    let enc = peripheral_ppa(
        PeripheralKind::OnehotEncoder,
        &PeripheralParams::single(org.associativity, 4.0 * UnitInverter::new(tech).c_in),
        tech,
    )?;
    let n_mats = org.n_mats() as u64;
    let n_sub = org.n_subarrays() as f64;
    let n_as = (org.n_asr * org.n_asc) as f64;
    let per_sub = org.mats_per_subarray() as f64;
    let mut extra = Vec::new();
    push(&mut extra, "tag_mats", n_mats, &PeripheralPPA { leakage_w: tag_mat.leakage_w, ..PeripheralPPA::ZERO });
    push(&mut extra, "tag_comparators", (org.n_subarrays() * org.associativity) as u64, &cmp);
    push(&mut extra, "tag_encoders", org.n_subarrays() as u64, &enc);

    // Share of the tree the tags sit behind, extra tag-side delay, and the
    // second-stage forward route.
    let (b, route_share, tag_local, stage2) = if variant == BankKind::TauHm {
        let (m, _) = assemble_m3d_mat_with(inp.data_design, tech, inp.folds, tag_mat.footprint_um2())?;
        let b = body(&org, &m, per_sub * m.footprint_um2(), per_sub * m.area_feol_um2, extra, tech)?;
        (b, 1.0, 0.0, 0.0)
    } else {
        let f = inp.central_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid(format!("central fraction must be in (0, 1], got {f}")));
        }
        let (central, _) = assemble_m3d_mat_with(inp.data_design, tech, inp.folds, tag_mat.footprint_um2() / f)?;
        let avg = f * central.footprint_um2() + (1.0 - f) * plain.footprint_um2();
        let avg_feol = f * central.area_feol_um2 + (1.0 - f) * plain.area_feol_um2;
        let b = body(&org, &plain, per_sub * avg, per_sub * avg_feol, extra, tech)?;
        let span = (n_sub * per_sub * avg).sqrt();
        let fwd = repeated_wire(tech.htree(), 0.5 * span * (1.0 - f.sqrt()), tech)?;
        // Tags of 1/f subarrays are packed into each central one.
        let gather = repeated_wire(tech.layer(LayerUse::Intermediate), 0.5 * (per_sub * central.footprint_um2() / f).sqrt(), tech)?;
        (b, f.sqrt(), gather.ppa.delay_s, fwd.ppa.delay_s)
    };
    let p = b.paths;
    let t_tag_local = p.t_ctrl + route_share * p.t_route + tag_local + tag_mat.t_read_s + cmp.delay_s;
    let confirm = t_tag_local + enc.delay_s + stage2;
    let tag_mats = (tag_org.n_amr * tag_org.n_amc) as f64;
    let e_tag = n_as * (tag_mats * tag_mat.e_read_j + org.associativity as f64 * cmp.dynamic_energy_j + enc.dynamic_energy_j);
    let mut ppa = b.ppa;
    ppa.t_hit_s = p.t_ready().max(confirm) + p.t_route;
    ppa.t_tag_s = t_tag_local;
    ppa.t_miss_detect_s = t_tag_local + route_share * p.t_route;
    ppa.subarray_busy_s = (confirm - (p.t_ctrl + p.t_route)).max(p.t_sub_read);
    ppa.e_hit_j = p.e_read + e_tag;
    ppa.e_miss_j = ppa.e_hit_j;
    ppa.e_write_j = p.e_write + e_tag;
    if variant == BankKind::TauHm {
        ppa.t_write_s = confirm.max(p.t_ctrl + p.t_route) + p.t_sub_write;
    } else {
        ppa.t_write_s = conventional.t_write_s;
        ppa.write_penalty_cycles = TAU_HT_WRITE_PENALTY_CYCLES;
    }
    Ok(ppa)
}

/// A data bank of plain stacked mats with a separate tag bank, for
/// comparison with TAU.
pub fn build_separate_tags(inp: &TauInputs<'_>, tech: &TechNode) -> Result<(BankPPA, BankPPA, BankPPA)> {
    let (tag_org, tag_mat) = tag_side(inp, tech)?;
    let data_mat = if inp.data_design.cell.is_beol {
        assemble_m3d_mat_with(inp.data_design, tech, inp.folds, 0.0)?.0
    } else {
        build_mat(inp.data_design, tech)?
    };
    check_mat(&tag_org, &tag_mat, mat_bits(inp.tag_design))?;
    check_mat(inp.data_org, &data_mat, mat_bits(inp.data_design))?;
    let data = single(inp.data_org, &data_mat, tech)?.ppa;
    let tag = single(&tag_org, &tag_mat, tech)?.ppa;
    let cache = compose_cache(&data, &tag)?;
    Ok((data, tag, cache))
}

/// `n` independent banks on a ring; every access pays one hop.
pub fn replicate_slices(bank: &BankPPA, n: usize, hop_s: f64) -> Result<BankPPA> {
    if n == 0 || !(hop_s >= 0.0) {
        return Err(Error::invalid("slices must be >= 1 and hop latency >= 0"));
    }
    let k = n as f64;
    let hop = if n > 1 { hop_s } else { 0.0 };
    let mut out = bank.clone();
    out.capacity_bytes *= n as u64;
    out.area_mm2 *= k;
    out.area_feol_mm2 *= k;
    out.area_beol_mm2 *= k;
    out.width_mm *= k;
    out.leakage_w *= k;
    out.e_refresh_row_j *= k;
    out.t_hit_s += hop;
    out.t_miss_detect_s += hop;
    out.t_write_s += hop;
    out.t_tag_s += hop;
    out.t_routing_s += hop;
    for c in &mut out.components {
        c.count *= n as u64;
        c.area_um2 *= k;
        c.leakage_w *= k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::load_cell;
    use crate::tech::load_tech;

    fn org(n_block: u64, a: usize, mode: AccessMode, kind: BankKind) -> BankOrg {
        let mut o = BankOrg::data(n_block * 64, 64, a, (1, 1), (1, 1), mode).unwrap();
        o.kind = kind;
        o
    }

    #[test]
    fn gdl_table_rows() {
        let g = gdl_widths(&org(1024, 16, AccessMode::Normal, BankKind::Data)).unwrap();
        assert_eq!((g.n_aw, g.n_bw, g.n_dw), (6, 4, 512));
        let g = gdl_widths(&org(1024, 16, AccessMode::Sequential, BankKind::Data)).unwrap();
        assert_eq!((g.n_aw, g.n_bw, g.n_dw), (10, 0, 512));
        let g = gdl_widths(&org(1024, 16, AccessMode::Fast, BankKind::TauHm)).unwrap();
        assert_eq!(g.n_dw, 512 * 16 + 16);
        let o = org(1024, 16, AccessMode::Normal, BankKind::Tag);
        assert_eq!(gdl_widths(&o).unwrap().n_dw, o.w_block_tag as u64);
    }

    #[test]
    fn tag_width_from_address() {
        // 2M blocks, 16 ways, 64 B lines: 17 set bits and 6 offset bits.
        assert_eq!(tag_bits(48, 1 << 21, 16, 64).unwrap(), 48 - 17 - 6 + 2);
        assert!(tag_bits(20, 1 << 21, 1, 64).is_err());
    }

    #[test]
    fn htree_legs() {
        let t = load_tech("7nm").unwrap();
        let mut o = org(1 << 16, 16, AccessMode::Normal, BankKind::Data);
        let h = route_htree(&o, 100.0, 50.0, 64, &t).unwrap();
        assert_eq!(h.delay_s, 0.0);
        assert!(h.legs_um.is_empty());
        o.n_sr = 2;
        o.n_sc = 2;
        let h = route_htree(&o, 100.0, 50.0, 64, &t).unwrap();
        assert_eq!(h.legs_um, vec![50.0, 25.0]);
        let h2 = route_htree(&o, 200.0, 100.0, 64, &t).unwrap();
        assert_eq!(h2.legs_um, vec![100.0, 50.0]);
        assert!(h2.delay_s > h.delay_s);
    }

    #[test]
    fn active_mat_fit() {
        let mut o = BankOrg::data(1 << 20, 64, 8, (4, 4), (4, 8), AccessMode::Normal).unwrap();
        o.fit_active_mats(128).unwrap();
        assert_eq!((o.n_amr, o.n_amc), (1, 4));
        o.fit_active_mats(16).unwrap();
        assert_eq!((o.n_amr, o.n_amc), (4, 8));
        assert!(o.fit_active_mats(8).is_err());
    }

    fn small_bank(grid: (usize, usize), mode: AccessMode) -> (BankOrg, MatDesign, MatPPA, TechNode) {
        let t = load_tech("7nm").unwrap();
        let mats = 4 * grid.0 * grid.1;
        let bits = 256 * 256 * mats as u64;
        let mut o = BankOrg::data(bits / 8, 64, 8, grid, (2, 2), mode).unwrap();
        let d = MatDesign::new(load_cell("sram_7nm", &t).unwrap(), 256, 256);
        let m = build_mat(&d, &t).unwrap();
        o.fit_active_mats(m.output_bits).unwrap();
        (o, d, m, t)
    }

    #[test]
    fn bank_adds_to_mat_path() {
        let (o, d, m, t) = small_bank((1, 1), AccessMode::Normal);
        let b = build_bank(&o, &d, &m, &t).unwrap();
        assert!(b.t_hit_s > m.t_read_s);
        assert!(b.area_mm2 * 1e6 >= o.n_mats() as f64 * m.footprint_um2());
        assert!((b.component_leakage_w() - b.leakage_w).abs() <= 1e-12 * b.leakage_w);
        let (o4, _, _, _) = small_bank((4, 4), AccessMode::Normal);
        let b4 = build_bank(&o4, &d, &m, &t).unwrap();
        assert!(b4.t_hit_s > b.t_hit_s && b4.area_mm2 > b.area_mm2);
    }

    #[test]
    fn more_active_subarrays_cost_energy_not_latency() {
        let (o, d, m, t) = small_bank((4, 4), AccessMode::Normal);
        let one = build_bank(&o, &d, &m, &t).unwrap();
        let wide = build_bank(&o.clone().with_active_subarrays(2, 2), &d, &m, &t).unwrap();
        assert!(wide.e_hit_j > one.e_hit_j);
        assert!((wide.t_hit_s - one.t_hit_s).abs() < 1e-15);
    }

    #[test]
    fn mode_latency_order() {
        let hit = |mode| {
            let (o, d, m, t) = small_bank((4, 4), mode);
            let tag_d = MatDesign::new(load_cell("sram_7nm", &t).unwrap(), 64, 128);
            let tag_o = o.tag_bank();
            assert_eq!(tag_o.bits_per_mat(), tag_d.data_bits());
            let tag_m = build_mat(&tag_d, &t).unwrap();
            let mut tag_o = tag_o;
            tag_o.fit_active_mats(tag_m.output_bits).unwrap();
            let data = build_bank(&o, &d, &m, &t).unwrap();
            let tag = build_bank(&tag_o, &tag_d, &tag_m, &t).unwrap();
            compose_cache(&data, &tag).unwrap().t_hit_s
        };
        let (f, n, s) = (hit(AccessMode::Fast), hit(AccessMode::Normal), hit(AccessMode::Sequential));
        assert!(f <= n && n <= s, "{f} {n} {s}");
    }

    #[test]
    fn capacity_checked() {
        let (o, _, m, t) = small_bank((1, 1), AccessMode::Normal);
        let d = MatDesign::new(load_cell("sram_7nm", &t).unwrap(), 64, 128);
        assert!(matches!(build_bank(&o, &d, &m, &t), Err(Error::CapacityMismatch(..))));
    }

    #[test]
    fn slices_scale() {
        let (o, d, m, t) = small_bank((2, 2), AccessMode::Normal);
        let b = build_bank(&o, &d, &m, &t).unwrap();
        let r = replicate_slices(&b, 4, 1e-9).unwrap();
        assert_eq!(r.capacity_bytes, 4 * b.capacity_bytes);
        assert!((r.t_hit_s - b.t_hit_s - 1e-9).abs() < 1e-18);
        assert!(replicate_slices(&b, 0, 0.0).is_err());
    }
}

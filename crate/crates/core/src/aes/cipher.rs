use super::{AesState, Block, KeySchedule, Op, RoundKey, StepId};

/// Every operation output of one cipher run, ordered by encryption step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    entries: Vec<(StepId, AesState)>,
}

impl Trace {
    pub fn entries(&self) -> &[(StepId, AesState)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn state_at(&self, step: StepId) -> Option<&AesState> {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(&step))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(StepId, AesState)> {
        self.entries.iter()
    }
}

fn apply(step: StepId, state: &mut AesState, ks: &KeySchedule) {
    match step.op {
        Op::AddRoundKeyInitial | Op::AddRoundKey => state.add_round_key(ks.round_key(step.round)),
        Op::SubBytes => state.sub_bytes(),
        Op::ShiftRows => state.shift_rows(),
        Op::MixColumns => state.mix_columns(),
    }
}

fn undo(step: StepId, state: &mut AesState, ks: &KeySchedule) {
    match step.op {
        Op::AddRoundKeyInitial | Op::AddRoundKey => state.add_round_key(ks.round_key(step.round)),
        Op::SubBytes => state.inv_sub_bytes(),
        Op::ShiftRows => state.inv_shift_rows(),
        Op::MixColumns => state.inv_mix_columns(),
    }
}

/// Forward cipher with a hook on the state entering each step and one on the
/// state leaving it.
pub fn encrypt_with(
    pt: &Block,
    ks: &KeySchedule,
    mut before: impl FnMut(StepId, &mut AesState),
    mut after: impl FnMut(StepId, &AesState),
) -> Block {
    let mut state = AesState(*pt);
    for step in StepId::all(ks.rounds()) {
        before(step, &mut state);
        apply(step, &mut state, ks);
        after(step, &state);
    }
    state.0
}

/// Inverse cipher. `before_undo` sees the state aligned with the output of
/// each encryption step, immediately before that step is undone; steps are
/// visited last to first.
pub fn decrypt_with(
    ct: &Block,
    ks: &KeySchedule,
    mut before_undo: impl FnMut(StepId, &mut AesState),
) -> Block {
    let mut state = AesState(*ct);
    for step in StepId::all(ks.rounds()).into_iter().rev() {
        before_undo(step, &mut state);
        undo(step, &mut state, ks);
    }
    state.0
}

pub fn encrypt_block(pt: &Block, ks: &KeySchedule) -> Block {
    encrypt_with(pt, ks, |_, _| {}, |_, _| {})
}

pub fn decrypt_block(ct: &Block, ks: &KeySchedule) -> Block {
    decrypt_with(ct, ks, |_, _| {})
}

pub fn encrypt_trace(pt: &Block, ks: &KeySchedule) -> (Block, Trace) {
    let mut entries = Vec::with_capacity(4 * ks.rounds() as usize);
    let ct = encrypt_with(pt, ks, |_, _| {}, |step, s| entries.push((step, *s)));
    (ct, Trace { entries })
}

/// Inverse cipher whose trace entry at step `s` is the state the forward
/// cipher holds after `s`, so matching inputs give identical traces.
pub fn decrypt_trace(ct: &Block, ks: &KeySchedule) -> (Block, Trace) {
    let mut entries = Vec::with_capacity(4 * ks.rounds() as usize);
    let pt = decrypt_with(ct, ks, |step, s| entries.push((step, *s)));
    entries.reverse();
    (pt, Trace { entries })
}

/// Undo a final round: InvMixColumns(InvSubBytes(InvShiftRows(ct ^ k_last))).
///
/// The result is the output of a cipher one round shorter whose last round
/// key is InvMixColumns(K_{N-1}).
pub fn peel_final_round(ct: &Block, k_last: &RoundKey) -> Block {
    let mut s = AesState(*ct);
    s.add_round_key(k_last);
    s.inv_shift_rows();
    s.inv_sub_bytes();
    s.inv_mix_columns();
    s.0
}

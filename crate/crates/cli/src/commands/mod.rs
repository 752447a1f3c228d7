pub mod density_lp;
pub mod lemma;
pub mod quasi;
pub mod simulate;
pub mod tau_tail;

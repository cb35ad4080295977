use num_complex::Complex64;
use qresum_core::qcore::{qpoch_inf, theta_q, Branched, QContext};
use qresum_core::quad::{kernel, KernelKind};

fn main() {
    let c = QContext::new(0.05).unwrap();
    for j in 0..=8 {
        let u = 44.3 + 0.1 * j as f64;
        let m = u.exp();
        let tau = Branched::new(m, 0.0).unwrap();
        let kv = kernel(KernelKind::Theta, &tau, &c).unwrap();
        let th = theta_q(&tau, &c).unwrap();
        let fv = qpoch_inf(Complex64::new(0.3 * m, 0.0), &c).unwrap();
        println!("u={u:5.1}  kernel={:+.3e}  theta={:+.3e}  manual=-1/(lnq*th)={:+.3e}  f={:+.3e}",
            kv.re, th.re, (-1.0 / (c.ln_q * th.re)), fv.re);
    }
}

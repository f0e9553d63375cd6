use adslab_core::generator::*;
use adslab_core::semigroup::*;
fn main() {
    for n in [160usize, 320, 640] {
        let mut res = Resolution::reference(n, 12.0, 1);
        res.order = SbpOrder::Second;
        res.stretch = 0.0; // uniform for clean dispersion scaling
        let gen = assemble(&ProblemSpec::dissipative_sphere(1.0), &res).unwrap();
        let fa = finite_speed_test(&gen, 0, 1.5, 3.0, 5.0, 4.0, None).unwrap();
        println!("N={n}: arrival={:?} bound={:.4} dt={:.5}", fa.arrival_time, fa.bound, fa.dt);
    }
}

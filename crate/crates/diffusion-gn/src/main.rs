fn main() {
    std::process::exit(diffusion_gn::harness::cli(std::env::args()));
}

public class Engine {
    private double thrust;

    public Engine() {
        thrust = 0.0;
    }

    public void setThrust(double thrust) {
        this.thrust = thrust;
    }
}

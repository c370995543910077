public class InstanceAccessor {
    private static InstanceAccessor instance;

    private InstanceAccessor() {}

    public InstanceAccessor getInstance() {
        return instance;
    }
}
